#include "cfhet/skedastic.hpp"

#include "cfhet/errors.hpp"

#include <cmath>
#include <limits>

namespace cfhet {

SkedasticFamily parse_skedastic_family(std::string_view name) {
    if (name == "unit") return SkedasticFamily::Unit;
    if (name == "linear") return SkedasticFamily::LinearPower;
    if (name == "loglinear") return SkedasticFamily::LogLinear;
    throw InvalidArgument("unknown skedastic family '" + std::string(name) +
                          "' (expected unit, linear or loglinear)");
}

std::string_view to_string(SkedasticFamily family) {
    switch (family) {
        case SkedasticFamily::Unit: return "unit";
        case SkedasticFamily::LinearPower: return "linear";
        case SkedasticFamily::LogLinear: return "loglinear";
    }
    return "unknown";
}

MatrixXd skedastic_features(SkedasticFamily family, const Dataset& data) {
    const Eigen::Index n = data.n();
    if (family == SkedasticFamily::Unit) return MatrixXd(n, 0);
    const auto x_cols = data.nonconstant_x_columns();
    MatrixXd w(n, 1 + data.p_z() + static_cast<Eigen::Index>(x_cols.size()));
    w.col(0).setOnes();
    Eigen::Index c = 1;
    auto put = [&](const VectorXd& raw) {
        if (family == SkedasticFamily::LinearPower) {
            w.col(c++) = raw.cwiseAbs();
        } else {
            w.col(c++) = (raw.cwiseAbs().array() + kLogFeatureOffset).log().matrix();
        }
    };
    for (Eigen::Index j = 0; j < data.p_z(); ++j) put(data.z().col(j));
    for (Eigen::Index j : x_cols) put(data.x().col(j));
    return w;
}

std::vector<std::string> skedastic_feature_labels(SkedasticFamily family, const Dataset& data) {
    if (family == SkedasticFamily::Unit) return {};
    const bool log = family == SkedasticFamily::LogLinear;
    std::vector<std::string> labels{"const"};
    for (const auto& z : data.z_labels()) labels.push_back(log ? "log|" + z + "|" : "|" + z + "|");
    for (Eigen::Index j : data.nonconstant_x_columns()) {
        const auto& x = data.x_labels()[static_cast<std::size_t>(j)];
        labels.push_back(log ? "log|" + x + "|" : "|" + x + "|");
    }
    return labels;
}

double skedastic_variance(SkedasticFamily family, const VectorXd& gamma,
                          const Eigen::Ref<const Eigen::RowVectorXd>& w) {
    switch (family) {
        case SkedasticFamily::Unit: return 1.0;
        case SkedasticFamily::LinearPower: return w.dot(gamma);
        case SkedasticFamily::LogLinear: return std::exp(w.dot(gamma));
    }
    return 1.0;
}

ScaleGradient grad_h(SkedasticFamily family, const VectorXd& gamma,
                     const Eigen::Ref<const Eigen::RowVectorXd>& w, double variance_floor) {
    ScaleGradient out;
    if (family == SkedasticFamily::Unit) {
        out.gradient = VectorXd(0);
        return out;
    }
    if (w.size() != gamma.size()) throw InvalidArgument("grad_h: feature row and gamma differ in length");
    double variance = skedastic_variance(family, gamma, w);
    if (!(variance >= variance_floor) || variance <= 0.0) {
        variance = variance_floor;
        out.floored = true;
    }
    out.h = std::sqrt(variance);
    if (family == SkedasticFamily::LinearPower) {
        out.gradient = w.transpose() / (2.0 * out.h);
    } else {
        out.gradient = (0.5 * out.h) * w.transpose();
    }
    return out;
}

namespace {

double nls_objective(const VectorXd& s, const MatrixXd& w, const VectorXd& gamma) {
    const VectorXd fitted = (w * gamma).array().exp().matrix();
    const double obj = (s - fitted).squaredNorm();
    return std::isfinite(obj) ? obj : std::numeric_limits<double>::infinity();
}

}  // namespace

SkedasticFit fit_skedastic(const SkedasticSpec& spec, const VectorXd& squared_residuals,
                           const Dataset& data) {
    const Eigen::Index n = data.n();
    if (squared_residuals.size() != n) throw InvalidArgument("squared residuals do not match the dataset");
    if (!squared_residuals.allFinite() || (squared_residuals.array() < 0.0).any()) {
        throw InvalidArgument("squared residuals must be finite and nonnegative");
    }

    SkedasticFit fit;
    fit.family = spec.family;
    fit.features = skedastic_features(spec.family, data);
    fit.feature_labels = skedastic_feature_labels(spec.family, data);

    if (spec.family == SkedasticFamily::Unit) {
        fit.gamma = VectorXd(0);
        fit.fitted_variance = VectorXd::Ones(n);
        fit.h_values = VectorXd::Ones(n);
        fit.grad_h = MatrixXd(n, 0);
        return fit;
    }

    const MatrixXd& w = fit.features;
    if (n <= w.cols()) throw InvalidArgument("skedastic fit needs more rows than parameters");
    if (!(squared_residuals.maxCoeff() > 0.0)) {
        throw AllResidualsZero("first-stage residuals are all zero; the scale function is not identified");
    }
    fit.variance_floor = kVarianceFloorFactor * squared_residuals.mean();

    if (spec.family == SkedasticFamily::LinearPower) {
        fit.gamma = ols_solve(w, squared_residuals).coefficients;
    } else {
        const VectorXd log_s = (squared_residuals.array() + kLogRegressandOffset).log().matrix();
        VectorXd gamma = ols_solve(w, log_s).coefficients;
        double obj = nls_objective(squared_residuals, w, gamma);
        bool converged = false;
        int iter = 0;
        while (iter < kMaxGaussNewtonIterations) {
            ++iter;
            const VectorXd e = (w * gamma).array().exp().matrix();
            const VectorXd r = squared_residuals - e;
            const MatrixXd jac = w.array().colwise() * e.array();
            VectorXd step;
            try {
                step = ols_solve(jac, r).coefficients;
            } catch (const RankDeficient&) {
                break;
            }
            double t = 1.0;
            double trial = nls_objective(squared_residuals, w, gamma + step);
            while (!(trial < obj) && t > 1e-12) {
                t *= 0.5;
                trial = nls_objective(squared_residuals, w, gamma + t * step);
            }
            if (!(trial < obj)) {
                // No descent along the Gauss-Newton direction: stationary to working precision.
                converged = true;
                break;
            }
            const double rel = (obj - trial) / obj;
            gamma += t * step;
            obj = trial;
            if (rel < kGaussNewtonTolerance) {
                converged = true;
                break;
            }
        }
        fit.gamma = gamma;
        fit.nls_iterations = iter;
        fit.converged = converged;
    }

    fit.fitted_variance.resize(n);
    fit.h_values.resize(n);
    fit.grad_h.resize(n, w.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        fit.fitted_variance(i) = skedastic_variance(spec.family, fit.gamma, w.row(i));
        const ScaleGradient g = grad_h(spec.family, fit.gamma, w.row(i), fit.variance_floor);
        fit.h_values(i) = g.h;
        fit.grad_h.row(i) = g.gradient.transpose();
        if (g.floored) ++fit.floored_count;
    }
    return fit;
}

}  // namespace cfhet
