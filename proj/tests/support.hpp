#pragma once

#include "cfhet/dataset.hpp"
#include "cfhet/rng.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace cfhet::testing {

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

/// Endogenous design with p_z instruments, a constant plus `extra_x` nonconstant
/// controls, and conditional heteroskedasticity in both equations.
inline Dataset random_dataset(Eigen::Index n, Eigen::Index p_z, std::uint64_t seed, Eigen::Index extra_x = 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    MatrixXd z(n, p_z), x(n, 1 + extra_x);
    VectorXd d(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        for (Eigen::Index j = 1; j <= extra_x; ++j) x(i, j) = 0.5 + std::abs(nd(rng));
        double index = 0.3;
        for (Eigen::Index j = 0; j < p_z; ++j) {
            z(i, j) = std::abs(nd(rng)) + 0.1 * static_cast<double>(j);
            index += (1.0 + 0.3 * static_cast<double>(j)) * z(i, j);
        }
        for (Eigen::Index j = 1; j <= extra_x; ++j) index += 0.4 * x(i, j);
        const double v = nd(rng), u = nd(rng);
        const double h = std::sqrt(0.5 + z(i, 0));
        d(i) = index + h * v;
        y(i) = 1.0 * d(i) + 0.5 + (1.0 + 0.2 * std::abs(d(i))) * (u + 0.7 * v);
        for (Eigen::Index j = 1; j <= extra_x; ++j) y(i) += 0.3 * x(i, j);
    }
    std::vector<std::string> xl{"const"}, zl;
    for (Eigen::Index j = 1; j <= extra_x; ++j) xl.push_back("x" + std::to_string(j));
    for (Eigen::Index j = 0; j < p_z; ++j) zl.push_back("z" + std::to_string(j + 1));
    return Dataset(y, d, x, xl, z, zl);
}

}  // namespace cfhet::testing
