#pragma once

#include "cfhet/cf_model.hpp"
#include "cfhet/dataset.hpp"
#include "cfhet/first_stage.hpp"

#include <vector>

namespace cfhet {

/// First-step influence-function pieces. sigma_phi is block diagonal:
/// the (Z, X) Gram matrix and 2 * mean(grad_h grad_h' h^2); row i of m_scores is
///   [Z_i Vtilde_i, X_i Vtilde_i, grad_h_i (Vhat_i^2 - 1) h_i^3].
struct PhiInference {
    MatrixXd sigma_phi;
    MatrixXd sigma_phi_inv;
    MatrixXd m_scores;
};

PhiInference phi_inference(const FirstStageFit& first_stage, const Dataset& data);

/// Second-stage OLS quantities the sandwich is built from.
struct SecondStage {
    MatrixXd regressors;  // R(phi-hat), n x k
    VectorXd u_hat;
    VectorXd alpha;
};

/// Omega-hat = Sigma_a^-1 (n^-1 sum psi_i psi_i') Sigma_a^-1 with
///   psi_i = R_i U_i + C Sigma_phi^-1 M_i,
///   C = n^-1 sum_i (U_i J_i - R_i alpha' J_i).
/// omega_naive drops C, which is the HC0 sandwich of the second-stage OLS.
struct SandwichResult {
    MatrixXd omega;
    MatrixXd omega_naive;
    MatrixXd sigma_alpha;
    MatrixXd psi;
    MatrixXd correction_term;
    Eigen::Index n = 0;

    /// sqrt(diag(omega) / n)
    VectorXd standard_errors() const;
    VectorXd standard_errors_naive() const;
};

SandwichResult sandwich_variance(const SecondStage& second, const PhiInference& phi_inf,
                                 const RegressorJacobian& jacobian);

struct WaldResult {
    double statistic = 0.0;
    std::size_t df = 0;
    double p_value = 1.0;
};

/// Joint test that coefficients[indices] are zero, given Cov(coefficients) = covariance.
WaldResult wald_test(const VectorXd& coefficients, const MatrixXd& covariance,
                     const std::vector<Eigen::Index>& indices);

inline constexpr double kNormalQuantile975 = 1.959963984540054;

}  // namespace cfhet
