#include "cfhet/control_function.hpp"

#include "cfhet/errors.hpp"

#include <cmath>

namespace cfhet {

VectorXd CfFit::coefficients() const {
    VectorXd out(1 + alpha_w.size());
    out << alpha1, alpha_w;
    return out;
}

double CfFit::se_alpha1() const {
    if (sandwich.n == 0) throw InvalidArgument("fit was computed without inference");
    return std::sqrt(sandwich.omega(0, 0) / static_cast<double>(sandwich.n));
}

double CfFit::se_alpha1_naive() const {
    if (sandwich.n == 0) throw InvalidArgument("fit was computed without inference");
    return std::sqrt(sandwich.omega_naive(0, 0) / static_cast<double>(sandwich.n));
}

std::vector<Eigen::Index> CfFit::cf_indices() const {
    const Eigen::Index base = 1 + first_stage.pi2.size();
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = base; j < regressors.cols(); ++j) idx.push_back(j);
    return idx;
}

CfFit fit_cf(const Dataset& data, const CfModel& model, const CfOptions& options) {
    return fit_cf(data, model, fit_first_stage(data, model.skedastic), options);
}

CfFit fit_cf(const Dataset& data, const CfModel& model, FirstStageFit first, const CfOptions& options) {
    if (first.skedastic.family != model.skedastic.family) {
        throw InvalidArgument("first stage was fitted with a different skedastic family");
    }
    DesignMatrix r = build_regressors(model, data, first);
    ProjectionResult second = ols_solve(r, data.y());

    SandwichResult sandwich;
    std::size_t floored_rows = 0;
    if (options.compute_inference) {
        const PhiInference phi_inf = phi_inference(first, data);
        const RegressorJacobian jac = regressor_jacobian(model, data, first);
        floored_rows = jac.floored_rows;
        sandwich = sandwich_variance(SecondStage{r.values(), second.residuals, second.coefficients}, phi_inf, jac);
    }

    return CfFit{
        .alpha1 = second.coefficients(0),
        .alpha_w = second.coefficients.tail(second.coefficients.size() - 1),
        .regressors = std::move(r),
        .u_hat = std::move(second.residuals),
        .first_stage = std::move(first),
        .sandwich = std::move(sandwich),
        .condition_number = second.condition_number,
        .jacobian_floored_rows = floored_rows,
    };
}

}  // namespace cfhet
