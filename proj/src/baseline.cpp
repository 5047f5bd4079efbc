#include "cfhet/baseline.hpp"

#include "cfhet/errors.hpp"
#include "cfhet/parallel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace cfhet {

VectorXd LinearFit::coefficients() const {
    VectorXd out(1 + alpha2.size());
    out << alpha1, alpha2;
    return out;
}

double LinearFit::se_alpha1() const {
    return std::sqrt(hc_variance(0, 0));
}

namespace {

// (A'A)^-1 (sum_i a_i a_i' u_i^2) (A'A)^-1 where A holds the "bread" regressors.
MatrixXd hc0_covariance(const MatrixXd& bread_regressors, const VectorXd& residuals) {
    const MatrixXd gram = bread_regressors.transpose() * bread_regressors;
    const auto inv = invert_symmetric(gram);
    if (!inv) {
        const VectorXd s = singular_values(bread_regressors);
        throw RankDeficient(0, static_cast<std::size_t>(gram.rows()),
                            s(0) / s(s.size() - 1));
    }
    const MatrixXd weighted = bread_regressors.array().colwise() * residuals.array();
    const MatrixXd meat = weighted.transpose() * weighted;
    MatrixXd cov = (*inv) * meat * (*inv);
    return 0.5 * (cov + cov.transpose());
}

}  // namespace

LinearFit fit_ols(const Dataset& data) {
    const DesignMatrix design = data.structural_design();
    const ProjectionResult proj = ols_solve(design, data.y());
    LinearFit fit;
    fit.alpha1 = proj.coefficients(0);
    fit.alpha2 = proj.coefficients.tail(data.p_x());
    fit.residuals = proj.residuals;
    fit.condition_number = proj.condition_number;
    fit.hc_variance = hc0_covariance(design.values(), proj.residuals);
    return fit;
}

LinearFit fit_2sls(const Dataset& data) {
    const DesignMatrix controls = data.controls();
    const Eigen::Index n = data.n();
    if (n <= data.p_z() + data.p_x()) throw InvalidArgument("2SLS needs more rows than instruments plus controls");

    const MatrixXd z_bar = residualize(data.z(), controls);
    const VectorXd d_bar = residualize(data.d(), controls);
    const VectorXd y_bar = residualize(data.y(), controls);
    for (Eigen::Index j = 0; j < z_bar.cols(); ++j) {
        if (!(z_bar.col(j).norm() > kRankTolerance * data.z().col(j).norm())) {
            throw RankDeficient(static_cast<std::size_t>(data.p_x()),
                                static_cast<std::size_t>(data.p_x() + data.p_z()),
                                std::numeric_limits<double>::infinity());
        }
    }

    // Projection of D-bar on span(Z-bar); Z-bar is orthogonal to X, so this is P_{M_X Z} D.
    const ProjectionResult first = ols_solve(z_bar, d_bar);
    const VectorXd& d_hat = first.fitted;
    const double denom = d_hat.squaredNorm();
    if (!(denom > kRankTolerance * kRankTolerance * d_bar.squaredNorm()) || denom == 0.0) {
        throw RankDeficient(0, 1, std::numeric_limits<double>::infinity());
    }

    LinearFit fit;
    fit.alpha1 = d_hat.dot(y_bar) / denom;
    const ProjectionResult rest = ols_solve(controls, VectorXd(data.y() - fit.alpha1 * data.d()));
    fit.alpha2 = rest.coefficients;
    fit.residuals = rest.residuals;
    fit.condition_number = first.condition_number;

    MatrixXd instrumented(n, 1 + data.p_x());
    instrumented << VectorXd(data.d() - d_bar + d_hat), data.x();
    fit.hc_variance = hc0_covariance(instrumented, fit.residuals);

    const double rss_restricted = d_bar.squaredNorm();
    const double rss_full = first.residuals.squaredNorm();
    const auto df = static_cast<double>(n - data.p_z() - data.p_x());
    fit.first_stage_f = rss_full > 0.0
                            ? ((rss_restricted - rss_full) / static_cast<double>(data.p_z())) / (rss_full / df)
                            : std::numeric_limits<double>::infinity();
    fit.weak_instrument = fit.first_stage_f < kWeakInstrumentF;
    return fit;
}

namespace {

struct MomentSums {
    double a = 0.0, b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
    std::size_t count = 0;
};

constexpr std::size_t kOracleChunk = 1 << 16;

}  // namespace

BiasOracleResult bias_oracle_2sls(const McConfig& dgp, std::size_t draws, std::uint64_t seed,
                                  unsigned workers) {
    if (draws < 100000) throw InvalidArgument("bias oracle needs at least 1e5 draws");
    McConfig cfg = dgp;
    cfg.n = std::max<Eigen::Index>(cfg.n, 50);
    cfg.validate();

    const double z_mean = std::sqrt(2.0 / std::numbers::pi);
    const std::size_t chunks = (draws + kOracleChunk - 1) / kOracleChunk;
    std::vector<MomentSums> partial(chunks);

    parallel_for(chunks, workers, [&](std::size_t c) {
        const std::size_t m = std::min(kOracleChunk, draws - c * kOracleChunk);
        const Innovations inn = draw_innovations(seed, c, static_cast<Eigen::Index>(m));
        MomentSums s;
        for (std::size_t i = 0; i < m; ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const double z = inn.z(k);
            const double d = cfg.pi1 * z + cfg.pi2 + cfg.first_stage_scale(z) * inn.v(k);
            const double eps = inn.u(k) + cfg.lambda * inn.v(k);
            const double zbar = z - z_mean;
            const double a = cfg.pi1 * zbar * cfg.structural_scale(d) * eps;
            const double b = cfg.pi1 * cfg.pi1 * zbar * zbar;
            s.a += a;
            s.b += b;
            s.aa += a * a;
            s.bb += b * b;
            s.ab += a * b;
        }
        s.count = m;
        partial[c] = s;
    });

    MomentSums total;
    for (const auto& s : partial) {
        total.a += s.a;
        total.b += s.b;
        total.aa += s.aa;
        total.bb += s.bb;
        total.ab += s.ab;
        total.count += s.count;
    }
    const auto nd = static_cast<double>(total.count);
    const double mean_a = total.a / nd;
    const double mean_b = total.b / nd;
    if (mean_b < 1e-12) throw DegenerateInstrument("instrument carries no variation after partialling out X");

    BiasOracleResult out;
    out.cross_moment = mean_a;
    out.sigma_h = mean_b;
    out.bias = mean_a / mean_b;
    out.mc_draws = total.count;
    const double var_a = total.aa / nd - mean_a * mean_a;
    const double var_b = total.bb / nd - mean_b * mean_b;
    const double cov_ab = total.ab / nd - mean_a * mean_b;
    const double r = out.bias;
    const double var_lin = std::max(0.0, var_a - 2.0 * r * cov_ab + r * r * var_b);
    out.mc_standard_error = std::sqrt(var_lin / nd) / mean_b;
    return out;
}

}  // namespace cfhet
