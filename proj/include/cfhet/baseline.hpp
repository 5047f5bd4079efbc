#pragma once

#include "cfhet/dataset.hpp"
#include "cfhet/dgp.hpp"

#include <cstdint>

namespace cfhet {

/// OLS or 2SLS fit of Y on (D, X).
struct LinearFit {
    double alpha1 = 0.0;
    VectorXd alpha2;
    VectorXd residuals;
    /// Heteroskedasticity-robust (HC0) covariance of (alpha1, alpha2), already divided by n.
    MatrixXd hc_variance;
    double condition_number = 0.0;
    /// Homoskedastic first-stage F for excluding Z (2SLS only; 0 for OLS).
    double first_stage_f = 0.0;
    bool weak_instrument = false;

    VectorXd coefficients() const;
    double se_alpha1() const;
};

inline constexpr double kWeakInstrumentF = 10.0;

LinearFit fit_ols(const Dataset& data);

/// Two-stage least squares with D instrumented by Z, computed in the
/// partialled-out form (D'P D)^-1 D'P Y with P the projection on Z residualized on X.
LinearFit fit_2sls(const Dataset& data);

struct BiasOracleResult {
    double bias = 0.0;
    double sigma_h = 0.0;
    double cross_moment = 0.0;
    std::size_t mc_draws = 0;
    double mc_standard_error = 0.0;
};

/// Probability-limit bias of 2SLS under the Monte Carlo design, computed as
/// pi1 E[Zbar g(D,X) eps] / (pi1^2 E[Zbar^2]) by simulation over the exact
/// distribution of (Z, U, V). Zbar is Z minus its population mean sqrt(2/pi)
/// (X is a constant in the design). The standard error comes from the delta
/// method on the ratio of means. Results do not depend on `workers`.
BiasOracleResult bias_oracle_2sls(const McConfig& dgp, std::size_t draws, std::uint64_t seed,
                                  unsigned workers = 1);

}  // namespace cfhet
