#include "cfhet/linalg.hpp"

#include "cfhet/errors.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

namespace cfhet {

RankDeficient::RankDeficient(std::size_t rank, std::size_t columns, double condition_number)
    : Error("rank deficient design: numerical rank " + std::to_string(rank) + " < " +
            std::to_string(columns) + " columns (condition number " +
            std::to_string(condition_number) + ")"),
      rank_(rank),
      columns_(columns),
      condition_number_(condition_number) {}

TooManyFailures::TooManyFailures(std::size_t failed, std::size_t requested)
    : Error("bootstrap failed on " + std::to_string(failed) + " of " + std::to_string(requested) +
            " replicates"),
      failed_(failed) {}

bool all_finite(const Eigen::Ref<const MatrixXd>& m) {
    return m.allFinite();
}

DesignMatrix::DesignMatrix(MatrixXd values, std::vector<std::string> labels)
    : values_(std::move(values)), labels_(std::move(labels)) {
    if (values_.cols() < 1) throw InvalidArgument("design matrix needs at least one column");
    if (values_.rows() < values_.cols()) {
        throw InvalidArgument("design matrix has fewer rows (" + std::to_string(values_.rows()) +
                              ") than columns (" + std::to_string(values_.cols()) + ")");
    }
    if (static_cast<Eigen::Index>(labels_.size()) != values_.cols()) {
        throw InvalidArgument("design matrix label count does not match column count");
    }
    std::unordered_set<std::string> seen;
    for (const auto& label : labels_) {
        if (!seen.insert(label).second) throw InvalidArgument("duplicate column label '" + label + "'");
    }
    if (!values_.allFinite()) throw NonFiniteInput("design matrix contains non-finite entries");
}

std::optional<Eigen::Index> DesignMatrix::constant_column() const {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        const double first = values_(0, j);
        if (first != 0.0 && (values_.col(j).array() == first).all()) return j;
    }
    return std::nullopt;
}

VectorXd singular_values(const Eigen::Ref<const MatrixXd>& design) {
    if (design.cols() == 0) return VectorXd();
    // The singular values of A equal those of R in A P = Q R, and R is only k x k.
    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    const Eigen::Index k = design.cols();
    const MatrixXd r = qr.matrixR().topLeftCorner(std::min(design.rows(), k), k)
                           .triangularView<Eigen::Upper>();
    return Eigen::JacobiSVD<MatrixXd>(r).singularValues();
}

namespace {

struct RankInfo {
    std::size_t rank;
    double condition;
};

RankInfo rank_info(const MatrixXd& r_factor) {
    const VectorXd s = Eigen::JacobiSVD<MatrixXd>(r_factor).singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (smax > 0.0 && s(i) > kRankTolerance * smax) ++rank;
    }
    const double smin = s.size() > 0 ? s(s.size() - 1) : 0.0;
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    return {rank, cond};
}

}  // namespace

ProjectionResult ols_solve(const Eigen::Ref<const MatrixXd>& design, const VectorXd& target) {
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();
    if (target.size() != n) throw InvalidArgument("target length does not match design rows");
    if (k < 1 || n < k) throw InvalidArgument("least squares needs n >= k >= 1");
    if (!design.allFinite()) throw NonFiniteInput("design matrix contains non-finite entries");
    if (!target.allFinite()) throw NonFiniteInput("regression target contains non-finite entries");

    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    const MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const RankInfo info = rank_info(r);
    if (info.rank < static_cast<std::size_t>(k)) {
        throw RankDeficient(info.rank, static_cast<std::size_t>(k), info.condition);
    }

    ProjectionResult out;
    out.coefficients = qr.solve(target);
    out.fitted = design * out.coefficients;
    out.residuals = target - out.fitted;
    out.rank = info.rank;
    out.condition_number = info.condition;
    return out;
}

ProjectionResult ols_solve(const DesignMatrix& design, const VectorXd& target) {
    return ols_solve(design.values(), target);
}

MatrixXd residualize(const MatrixXd& block, const DesignMatrix& controls) {
    if (block.rows() != controls.rows()) {
        throw InvalidArgument("residualize: block and controls have different row counts");
    }
    if (!controls.constant_column()) {
        throw InvalidArgument("residualize: controls must include a constant column");
    }
    if (!block.allFinite()) throw NonFiniteInput("residualize: block contains non-finite entries");

    const Eigen::Index k = controls.cols();
    Eigen::ColPivHouseholderQR<MatrixXd> qr(controls.values());
    const MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const RankInfo info = rank_info(r);
    if (info.rank < static_cast<std::size_t>(k)) {
        throw RankDeficient(info.rank, static_cast<std::size_t>(k), info.condition);
    }
    const MatrixXd coef = qr.solve(block);
    return block - controls.values() * coef;
}

VectorXd residualize(const VectorXd& target, const DesignMatrix& controls) {
    return residualize(MatrixXd(target), controls).col(0);
}

std::optional<MatrixXd> invert_symmetric(const MatrixXd& m, double rel_tol) {
    if (m.rows() != m.cols()) throw InvalidArgument("invert_symmetric: matrix is not square");
    if (m.rows() == 0) return MatrixXd(0, 0);
    if (!m.allFinite()) return std::nullopt;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (m + m.transpose()));
    const VectorXd& ev = eig.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    if (!(top > 0.0) || ev.minCoeff() <= rel_tol * top) return std::nullopt;
    const MatrixXd& q = eig.eigenvectors();
    return MatrixXd(q * ev.cwiseInverse().asDiagonal() * q.transpose());
}

}  // namespace cfhet
