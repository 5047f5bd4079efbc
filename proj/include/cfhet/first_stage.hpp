#pragma once

#include "cfhet/dataset.hpp"
#include "cfhet/skedastic.hpp"

namespace cfhet {

/// First-stage estimates phi = (pi1, pi2, gamma) and the control function.
struct FirstStageFit {
    VectorXd pi1;
    VectorXd pi2;
    SkedasticFit skedastic;
    /// D - Z'pi1 - X'pi2
    VectorXd v_raw;
    /// v_raw / h
    VectorXd v_hat;
    /// Homoskedastic F for the instruments; a diagnostic only.
    double f_statistic = 0.0;
    double condition_number = 0.0;

    Eigen::Index phi_dim() const { return pi1.size() + pi2.size() + skedastic.gamma.size(); }
    VectorXd phi() const;
};

/// OLS of D on (Z, X), skedastic fit on the squared residuals, V-hat = V-tilde / h-hat.
FirstStageFit fit_first_stage(const Dataset& data, const SkedasticSpec& spec);

/// Control function evaluated at an arbitrary parameter vector phi, reusing the
/// skedastic family, features and variance floor of `reference`. Nothing is refit.
FirstStageFit first_stage_at(const Dataset& data, const FirstStageFit& reference, const VectorXd& phi);

}  // namespace cfhet
