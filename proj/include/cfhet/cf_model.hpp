#pragma once

#include "cfhet/dataset.hpp"
#include "cfhet/first_stage.hpp"
#include "cfhet/skedastic.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace cfhet {

/// One monomial of the control-function block.
///   Endogenous: D^power * V^v_power     (power >= 0)
///   Exogenous:  X_c^power * V^v_power   (power >= 1), one column per nonconstant X column c
struct CfTerm {
    enum class Interaction { Endogenous, Exogenous };

    Interaction interaction = Interaction::Endogenous;
    int power = 0;
    int v_power = 1;

    bool operator==(const CfTerm&) const = default;
};

struct CfModel {
    std::vector<CfTerm> terms;
    SkedasticSpec skedastic;
};

/// Parses a term list such as "v+vd+v2+v2d" ('+' or ',' separated). Each term is
/// 'v' with an optional power, then optionally 'd' or 'x' with an optional power:
/// "v2d" is V^2 D, "vd2" is V D^2, "vx" is V times each nonconstant X.
/// Named presets: "cf1" = v+vd, "cf2" = v+vd+vd2; "none" or "" is the empty set.
std::vector<CfTerm> parse_cf_terms(std::string_view text);

/// Validates the term list (v_power >= 1, no duplicates) and builds a model.
CfModel make_cf_model(std::vector<CfTerm> terms, SkedasticSpec skedastic);
CfModel make_cf_model(std::string_view terms, SkedasticFamily family);

/// Presets that appear in the Monte Carlo and empirical grids.
const std::vector<std::string>& cf_preset_names();

std::string term_label(const CfTerm& term, const std::string& d_label, const std::string& x_label = "");

/// Number of columns the CF block contributes for this dataset.
Eigen::Index cf_column_count(const CfModel& model, const Dataset& data);

/// R = [D | X | CF terms in model order], with CF term (s, j) = D^s * Vhat^j.
DesignMatrix build_regressors(const CfModel& model, const Dataset& data, const FirstStageFit& first_stage);

/// Per-row Jacobian of R with respect to phi = (pi1, pi2, gamma). Every CF entry is
/// j * D^s * Vhat^(j-1) * dVhat/dphi, so row i is the outer product
/// term_factor.row(i)' * dv_dphi.row(i); D and X rows are zero.
struct RegressorJacobian {
    MatrixXd term_factor;  // n x dim(R)
    MatrixXd dv_dphi;      // n x dim(phi)
    std::size_t floored_rows = 0;

    MatrixXd row(Eigen::Index i) const {
        return term_factor.row(i).transpose() * dv_dphi.row(i);
    }
};

RegressorJacobian regressor_jacobian(const CfModel& model, const Dataset& data,
                                     const FirstStageFit& first_stage);

}  // namespace cfhet
