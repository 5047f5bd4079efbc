#pragma once

// Independent reference computations shared by the unit and acceptance suites.

#include "cfhet/cf_model.hpp"
#include "cfhet/first_stage.hpp"

#include <algorithm>
#include <cmath>

namespace cfhet::testing {

struct JacobianCheck {
    double worst_relative = 0.0;
    std::size_t entries = 0;
    std::size_t failures = 0;
};

/// Compares the analytic per-row Jacobian of R(phi) against central differences
/// of build_regressors, stepping phi_k by 1e-6 (1 + |phi_k|). An entry passes when
/// |analytic - fd| <= tol * max(|analytic|, |fd|) or both are below `zero_floor`.
inline JacobianCheck check_jacobian_fd(const CfModel& model, const Dataset& data, const FirstStageFit& fs,
                                       const std::vector<Eigen::Index>& rows, double tol = 1e-5,
                                       double zero_floor = 1e-8) {
    const RegressorJacobian jac = regressor_jacobian(model, data, fs);
    const VectorXd phi = fs.phi();
    std::vector<MatrixXd> fd(static_cast<std::size_t>(phi.size()));
    for (Eigen::Index k = 0; k < phi.size(); ++k) {
        const double step = 1e-6 * (1.0 + std::abs(phi(k)));
        VectorXd up = phi, dn = phi;
        up(k) += step;
        dn(k) -= step;
        const MatrixXd r_up = build_regressors(model, data, first_stage_at(data, fs, up)).values();
        const MatrixXd r_dn = build_regressors(model, data, first_stage_at(data, fs, dn)).values();
        fd[static_cast<std::size_t>(k)] = (r_up - r_dn) / (2.0 * step);
    }
    JacobianCheck out;
    for (Eigen::Index i : rows) {
        const MatrixXd analytic = jac.row(i);
        for (Eigen::Index r = 0; r < analytic.rows(); ++r) {
            for (Eigen::Index k = 0; k < analytic.cols(); ++k) {
                const double a = analytic(r, k);
                const double f = fd[static_cast<std::size_t>(k)](i, r);
                const double scale = std::max(std::abs(a), std::abs(f));
                ++out.entries;
                if (scale < zero_floor) continue;
                const double rel = std::abs(a - f) / scale;
                out.worst_relative = std::max(out.worst_relative, rel);
                if (rel > tol) ++out.failures;
            }
        }
    }
    return out;
}

/// Largest |column mean| / (column SD / sqrt(n)) over the columns of a score matrix.
inline double max_standardized_mean(const MatrixXd& m) {
    const auto n = static_cast<double>(m.rows());
    double worst = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double mean = m.col(j).mean();
        const double sd = std::sqrt((m.col(j).array() - mean).square().sum() / (n - 1.0));
        worst = std::max(worst, std::abs(mean) / (sd / std::sqrt(n)));
    }
    return worst;
}

}  // namespace cfhet::testing
