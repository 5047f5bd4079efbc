#pragma once

#include "cfhet/dataset.hpp"

#include <cstdint>

namespace cfhet {

/// Parameters of the Monte Carlo design
///
///   Y = a1 D + a2 X + g(D, X) (U + lambda V)
///   D = p1 Z + p2 X + h(Z, X) V
///   g(D, X) = delta1 D + delta2 D^2 + delta3 X
///   h(Z, X)^2 = gamma1 Z + gamma2 X
///
/// with U, V iid N(0,1), Z ~ |N(0,1)| and X = 1.
struct McConfig {
    Eigen::Index n = 1000;
    std::size_t replications = 2000;
    double lambda = 1.0;
    double gamma1 = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double pi1 = 1.0;
    double pi2 = 1.0;
    double delta3 = 1.0;
    double gamma2 = 1.0;
    std::uint64_t seed = 1;

    /// Throws InvalidArgument unless n >= 50, replications >= 1, gamma1 >= 0, gamma2 > 0.
    void validate() const;

    double first_stage_scale(double z) const;
    double structural_scale(double d) const;
};

struct Innovations {
    VectorXd z;
    VectorXd u;
    VectorXd v;
};

/// Z, U, V for block `index` of the stream family keyed by `seed`. Each variable
/// has its own substream, so e.g. changing lambda leaves every draw unchanged.
Innovations draw_innovations(std::uint64_t seed, std::uint64_t index, Eigen::Index n);

/// One simulated sample; deterministic in (config.seed, rep_index).
Dataset simulate_dgp(const McConfig& config, std::uint64_t rep_index);

}  // namespace cfhet
