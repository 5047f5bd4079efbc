#include "cfhet/dgp.hpp"

#include "cfhet/errors.hpp"
#include "cfhet/rng.hpp"

#include <cmath>

namespace cfhet {

void McConfig::validate() const {
    if (n < 50) throw InvalidArgument("Monte Carlo sample size must be at least 50");
    if (replications < 1) throw InvalidArgument("at least one replication is required");
    if (!(gamma1 >= 0.0) || !(gamma2 > 0.0)) {
        throw InvalidArgument("first-stage variance gamma1*Z + gamma2 must be positive (gamma1 >= 0, gamma2 > 0)");
    }
    for (double v : {lambda, delta1, delta2, alpha1, alpha2, pi1, pi2, delta3}) {
        if (!std::isfinite(v)) throw InvalidArgument("Monte Carlo parameters must be finite");
    }
}

double McConfig::first_stage_scale(double z) const {
    return std::sqrt(gamma1 * z + gamma2);
}

double McConfig::structural_scale(double d) const {
    return delta1 * d + delta2 * d * d + delta3;
}

Innovations draw_innovations(std::uint64_t seed, std::uint64_t index, Eigen::Index n) {
    Innovations out{VectorXd(n), VectorXd(n), VectorXd(n)};
    Engine ez = make_stream(seed, index, StreamTag::Instrument);
    Engine eu = make_stream(seed, index, StreamTag::StructuralNoise);
    Engine ev = make_stream(seed, index, StreamTag::FirstStageNoise);
    std::normal_distribution<double> nz, nu, nv;
    for (Eigen::Index i = 0; i < n; ++i) out.z(i) = std::abs(nz(ez));
    for (Eigen::Index i = 0; i < n; ++i) out.u(i) = nu(eu);
    for (Eigen::Index i = 0; i < n; ++i) out.v(i) = nv(ev);
    return out;
}

Dataset simulate_dgp(const McConfig& config, std::uint64_t rep_index) {
    config.validate();
    const Eigen::Index n = config.n;
    const Innovations draws = draw_innovations(config.seed, rep_index, n);
    VectorXd y(n), d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double z = draws.z(i);
        d(i) = config.pi1 * z + config.pi2 + config.first_stage_scale(z) * draws.v(i);
        const double eps = draws.u(i) + config.lambda * draws.v(i);
        y(i) = config.alpha1 * d(i) + config.alpha2 + config.structural_scale(d(i)) * eps;
    }
    return Dataset(std::move(y), std::move(d), MatrixXd::Ones(n, 1), {"const"}, draws.z, {"z"});
}

}  // namespace cfhet
