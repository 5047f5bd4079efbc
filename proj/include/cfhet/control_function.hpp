#pragma once

#include "cfhet/cf_model.hpp"
#include "cfhet/dataset.hpp"
#include "cfhet/first_stage.hpp"
#include "cfhet/inference.hpp"

#include <vector>

namespace cfhet {

/// Augmented control-function fit: OLS of Y on R(phi-hat) = [D | X | CF terms].
struct CfFit {
    double alpha1 = 0.0;
    /// Coefficients on the X block followed by the CF terms.
    VectorXd alpha_w;
    DesignMatrix regressors;
    VectorXd u_hat;
    FirstStageFit first_stage;
    /// Empty (n == 0) when inference was not requested.
    SandwichResult sandwich;
    double condition_number = 0.0;
    std::size_t jacobian_floored_rows = 0;

    VectorXd coefficients() const;
    const MatrixXd& omega() const { return sandwich.omega; }
    const MatrixXd& omega_naive() const { return sandwich.omega_naive; }
    double se_alpha1() const;
    double se_alpha1_naive() const;
    /// Positions of the CF-term coefficients within coefficients().
    std::vector<Eigen::Index> cf_indices() const;
};

struct CfOptions {
    bool compute_inference = true;
};

CfFit fit_cf(const Dataset& data, const CfModel& model, const CfOptions& options = {});

/// Second step only, reusing a first stage fitted with model.skedastic.
CfFit fit_cf(const Dataset& data, const CfModel& model, FirstStageFit first_stage,
             const CfOptions& options = {});

}  // namespace cfhet
