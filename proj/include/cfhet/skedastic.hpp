#pragma once

#include "cfhet/dataset.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace cfhet {

/// Variance-function families for the first-stage error:
///   Unit         h = 1
///   LinearPower  h^2 = w'gamma,       w = (1, |Z|, |X nonconstant|)
///   LogLinear    h^2 = exp(w'gamma),  w = (1, log|Z|, log|X nonconstant|)
enum class SkedasticFamily { Unit, LinearPower, LogLinear };

/// Accepts "unit", "linear" and "loglinear".
SkedasticFamily parse_skedastic_family(std::string_view name);
std::string_view to_string(SkedasticFamily family);

struct SkedasticSpec {
    SkedasticFamily family = SkedasticFamily::Unit;
};

inline constexpr double kLogFeatureOffset = 1e-12;
inline constexpr double kLogRegressandOffset = 1e-12;
inline constexpr double kVarianceFloorFactor = 1e-8;
inline constexpr int kMaxGaussNewtonIterations = 100;
inline constexpr double kGaussNewtonTolerance = 1e-10;

/// Feature matrix w_i for every row (n x 0 for Unit). Constant X columns are skipped.
MatrixXd skedastic_features(SkedasticFamily family, const Dataset& data);
std::vector<std::string> skedastic_feature_labels(SkedasticFamily family, const Dataset& data);

/// h^2(w; gamma) before any flooring.
double skedastic_variance(SkedasticFamily family, const VectorXd& gamma,
                          const Eigen::Ref<const Eigen::RowVectorXd>& w);

struct ScaleGradient {
    double h = 1.0;
    VectorXd gradient;
    /// True when the fitted variance was below the floor and h was clamped (degenerate scale).
    bool floored = false;
};

/// h and its gradient in gamma at one row. LinearPower: w / (2h);
/// LogLinear: (h / 2) w. A floored row uses the floored h.
ScaleGradient grad_h(SkedasticFamily family, const VectorXd& gamma,
                     const Eigen::Ref<const Eigen::RowVectorXd>& w, double variance_floor);

struct SkedasticFit {
    SkedasticFamily family = SkedasticFamily::Unit;
    VectorXd gamma;
    MatrixXd features;
    std::vector<std::string> feature_labels;
    /// Fitted h_i^2 before flooring.
    VectorXd fitted_variance;
    VectorXd h_values;
    MatrixXd grad_h;
    double variance_floor = 0.0;
    std::size_t floored_count = 0;
    int nls_iterations = 0;
    bool converged = true;
};

/// Minimizes sum_i (s_i - h_i(gamma)^2)^2 over gamma, where s are squared
/// first-stage residuals. LinearPower is linear in gamma and solved by OLS;
/// LogLinear starts from OLS of log(s + 1e-12) on w and iterates Gauss-Newton
/// with step halving until the relative objective decrease drops below 1e-10
/// (converged) or 100 iterations pass (converged = false, best iterate kept).
/// Fitted variances are floored at 1e-8 * mean(s).
SkedasticFit fit_skedastic(const SkedasticSpec& spec, const VectorXd& squared_residuals,
                           const Dataset& data);

}  // namespace cfhet
