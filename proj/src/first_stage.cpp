#include "cfhet/first_stage.hpp"

#include "cfhet/errors.hpp"

#include <limits>

namespace cfhet {

VectorXd FirstStageFit::phi() const {
    VectorXd out(phi_dim());
    out << pi1, pi2, skedastic.gamma;
    return out;
}

FirstStageFit fit_first_stage(const Dataset& data, const SkedasticSpec& spec) {
    const DesignMatrix design = data.instrument_design();
    const ProjectionResult proj = ols_solve(design, data.d());

    FirstStageFit fs;
    fs.pi1 = proj.coefficients.head(data.p_z());
    fs.pi2 = proj.coefficients.tail(data.p_x());
    fs.v_raw = proj.residuals;
    fs.condition_number = proj.condition_number;

    const double rss_full = proj.residuals.squaredNorm();
    const double rss_restricted = ols_solve(data.controls(), data.d()).residuals.squaredNorm();
    const auto df = static_cast<double>(data.n() - data.p_z() - data.p_x());
    fs.f_statistic = rss_full > 0.0 && df > 0.0
                         ? ((rss_restricted - rss_full) / static_cast<double>(data.p_z())) / (rss_full / df)
                         : std::numeric_limits<double>::infinity();

    fs.skedastic = fit_skedastic(spec, fs.v_raw.cwiseAbs2(), data);
    if (spec.family == SkedasticFamily::Unit) {
        fs.v_hat = fs.v_raw;
    } else {
        fs.v_hat = fs.v_raw.cwiseQuotient(fs.skedastic.h_values);
    }
    return fs;
}

FirstStageFit first_stage_at(const Dataset& data, const FirstStageFit& reference, const VectorXd& phi) {
    const Eigen::Index pz = data.p_z(), px = data.p_x();
    const Eigen::Index pg = reference.skedastic.gamma.size();
    if (phi.size() != pz + px + pg) throw InvalidArgument("first_stage_at: phi has the wrong length");
    if (reference.skedastic.features.rows() != data.n()) {
        throw InvalidArgument("first_stage_at: reference fit belongs to a different dataset");
    }

    FirstStageFit fs = reference;
    fs.pi1 = phi.head(pz);
    fs.pi2 = phi.segment(pz, px);
    fs.skedastic.gamma = phi.tail(pg);
    fs.v_raw = data.d() - data.z() * fs.pi1 - data.x() * fs.pi2;

    SkedasticFit& sk = fs.skedastic;
    sk.floored_count = 0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (sk.family == SkedasticFamily::Unit) break;
        sk.fitted_variance(i) = skedastic_variance(sk.family, sk.gamma, sk.features.row(i));
        const ScaleGradient g = grad_h(sk.family, sk.gamma, sk.features.row(i), sk.variance_floor);
        sk.h_values(i) = g.h;
        sk.grad_h.row(i) = g.gradient.transpose();
        if (g.floored) ++sk.floored_count;
    }
    fs.v_hat = fs.v_raw.cwiseQuotient(sk.h_values);
    return fs;
}

}  // namespace cfhet
