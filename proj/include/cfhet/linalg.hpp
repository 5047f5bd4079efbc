#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace cfhet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Relative singular-value threshold below which a design is declared rank deficient.
inline constexpr double kRankTolerance = 1e-10;
/// Condition numbers above this are reported as ill conditioned (warning only).
inline constexpr double kConditionWarning = 1e8;

/// Dense n x k regressor block with one semantic label per column.
///
/// Construction enforces n >= k >= 1, finite entries and unique labels.
class DesignMatrix {
public:
    DesignMatrix(MatrixXd values, std::vector<std::string> labels);

    const MatrixXd& values() const noexcept { return values_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    Eigen::Index rows() const noexcept { return values_.rows(); }
    Eigen::Index cols() const noexcept { return values_.cols(); }

    /// Index of the first column whose entries are all equal and nonzero, if any.
    std::optional<Eigen::Index> constant_column() const;

private:
    MatrixXd values_;
    std::vector<std::string> labels_;
};

struct ProjectionResult {
    VectorXd coefficients;
    VectorXd fitted;
    VectorXd residuals;
    std::size_t rank = 0;
    double condition_number = 0.0;

    bool ill_conditioned() const noexcept { return condition_number > kConditionWarning; }
};

/// Least squares of `target` on the columns of `design` by column-pivoted QR.
///
/// Throws RankDeficient when the smallest singular value of the design is below
/// kRankTolerance times the largest, and NonFiniteInput on NaN/Inf in the target.
ProjectionResult ols_solve(const DesignMatrix& design, const VectorXd& target);
ProjectionResult ols_solve(const Eigen::Ref<const MatrixXd>& design, const VectorXd& target);

/// Columns of `block` minus their linear projection on `controls`.
/// `controls` must contain a constant column.
MatrixXd residualize(const MatrixXd& block, const DesignMatrix& controls);
VectorXd residualize(const VectorXd& target, const DesignMatrix& controls);

/// Singular values of `design`, largest first.
VectorXd singular_values(const Eigen::Ref<const MatrixXd>& design);

/// Inverse of a symmetric positive semidefinite matrix, or nullopt when its
/// eigenvalue ratio falls below `rel_tol`. A 0x0 input yields a 0x0 inverse.
std::optional<MatrixXd> invert_symmetric(const MatrixXd& m, double rel_tol = kRankTolerance);

bool all_finite(const Eigen::Ref<const MatrixXd>& m);

}  // namespace cfhet
