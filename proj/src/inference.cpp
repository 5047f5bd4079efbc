#include "cfhet/inference.hpp"

#include "cfhet/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>

namespace cfhet {

PhiInference phi_inference(const FirstStageFit& first_stage, const Dataset& data) {
    const SkedasticFit& sk = first_stage.skedastic;
    if (!sk.converged) throw NonConvergence("skedastic fit did not converge");
    const Eigen::Index n = data.n();
    const Eigen::Index pzx = data.p_z() + data.p_x();
    const Eigen::Index pg = sk.gamma.size();
    const auto nd = static_cast<double>(n);

    MatrixXd zx(n, pzx);
    zx << data.z(), data.x();

    PhiInference out;
    out.sigma_phi = MatrixXd::Zero(pzx + pg, pzx + pg);
    out.sigma_phi.topLeftCorner(pzx, pzx) = zx.transpose() * zx / nd;

    out.m_scores.resize(n, pzx + pg);
    out.m_scores.leftCols(pzx) = zx.array().colwise() * first_stage.v_raw.array();

    if (pg > 0) {
        const VectorXd& h = sk.h_values;
        const MatrixXd gh = sk.grad_h.array().colwise() * h.array();  // grad_h * h
        out.sigma_phi.bottomRightCorner(pg, pg) = 2.0 * gh.transpose() * gh / nd;
        const VectorXd weight =
            ((first_stage.v_hat.array().square() - 1.0) * h.array().cube()).matrix();
        out.m_scores.rightCols(pg) = sk.grad_h.array().colwise() * weight.array();
    }

    out.sigma_phi_inv = MatrixXd::Zero(pzx + pg, pzx + pg);
    const auto gram_inv = invert_symmetric(out.sigma_phi.topLeftCorner(pzx, pzx));
    if (!gram_inv) throw SingularSigmaPhi("Gram block of (Z, X) is singular");
    out.sigma_phi_inv.topLeftCorner(pzx, pzx) = *gram_inv;
    if (pg > 0) {
        const auto gamma_inv = invert_symmetric(out.sigma_phi.bottomRightCorner(pg, pg));
        if (!gamma_inv) throw SingularSigmaPhi("scale-parameter block is singular");
        out.sigma_phi_inv.bottomRightCorner(pg, pg) = *gamma_inv;
    }
    return out;
}

VectorXd SandwichResult::standard_errors() const {
    return (omega.diagonal() / static_cast<double>(n)).cwiseSqrt();
}

VectorXd SandwichResult::standard_errors_naive() const {
    return (omega_naive.diagonal() / static_cast<double>(n)).cwiseSqrt();
}

SandwichResult sandwich_variance(const SecondStage& second, const PhiInference& phi_inf,
                                 const RegressorJacobian& jacobian) {
    const MatrixXd& r = second.regressors;
    const Eigen::Index n = r.rows();
    const Eigen::Index k = r.cols();
    const Eigen::Index p = phi_inf.sigma_phi.rows();
    if (second.u_hat.size() != n || second.alpha.size() != k || phi_inf.m_scores.rows() != n ||
        phi_inf.m_scores.cols() != p || jacobian.term_factor.rows() != n ||
        jacobian.term_factor.cols() != k || jacobian.dv_dphi.cols() != p) {
        throw InvalidArgument("sandwich_variance: inconsistent dimensions");
    }
    const auto nd = static_cast<double>(n);

    SandwichResult out;
    out.n = n;
    out.sigma_alpha = r.transpose() * r / nd;
    const auto sigma_alpha_inv = invert_symmetric(out.sigma_alpha);
    if (!sigma_alpha_inv) throw SingularSigmaAlpha("second-stage moment matrix is singular");

    // U_i J_i - R_i alpha'J_i = (U_i t_i - (alpha't_i) R_i) g_i', with J_i = t_i g_i'.
    const VectorXd alpha_t = jacobian.term_factor * second.alpha;
    const MatrixXd a = (jacobian.term_factor.array().colwise() * second.u_hat.array()).matrix() -
                       (r.array().colwise() * alpha_t.array()).matrix();
    out.correction_term = a.transpose() * jacobian.dv_dphi / nd;

    const MatrixXd ru = r.array().colwise() * second.u_hat.array();
    out.psi = ru + phi_inf.m_scores * (out.correction_term * phi_inf.sigma_phi_inv).transpose();

    const MatrixXd& inv = *sigma_alpha_inv;
    MatrixXd omega = inv * (out.psi.transpose() * out.psi / nd) * inv;
    out.omega = 0.5 * (omega + omega.transpose());
    MatrixXd naive = inv * (ru.transpose() * ru / nd) * inv;
    out.omega_naive = 0.5 * (naive + naive.transpose());
    return out;
}

WaldResult wald_test(const VectorXd& coefficients, const MatrixXd& covariance,
                     const std::vector<Eigen::Index>& indices) {
    const auto q = static_cast<Eigen::Index>(indices.size());
    if (q == 0) throw InvalidArgument("wald_test needs at least one coefficient");
    VectorXd b(q);
    MatrixXd v(q, q);
    for (Eigen::Index i = 0; i < q; ++i) {
        b(i) = coefficients(indices[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < q; ++j) {
            v(i, j) = covariance(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j)]);
        }
    }
    const auto v_inv = invert_symmetric(v);
    if (!v_inv) throw SingularSigmaAlpha("covariance of the tested coefficients is singular");
    WaldResult out;
    out.statistic = b.dot(*v_inv * b);
    out.df = static_cast<std::size_t>(q);
    const boost::math::chi_squared dist(static_cast<double>(q));
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
    return out;
}

}  // namespace cfhet
