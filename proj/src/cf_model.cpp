#include "cfhet/cf_model.hpp"

#include "cfhet/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace cfhet {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

int read_power(std::string_view token, std::size_t& pos, int fallback) {
    std::size_t start = pos;
    while (pos < token.size() && std::isdigit(static_cast<unsigned char>(token[pos]))) ++pos;
    if (pos == start) return fallback;
    return std::stoi(std::string(token.substr(start, pos - start)));
}

CfTerm parse_term(std::string_view token) {
    const std::string t = trim(token);
    std::size_t pos = 0;
    if (t.empty() || (t[pos] != 'v' && t[pos] != 'V')) {
        throw InvalidArgument("CF term '" + t + "' must start with 'v'");
    }
    ++pos;
    CfTerm term;
    term.v_power = read_power(t, pos, 1);
    if (pos < t.size()) {
        const char kind = static_cast<char>(std::tolower(static_cast<unsigned char>(t[pos])));
        if (kind != 'd' && kind != 'x') throw InvalidArgument("CF term '" + t + "': expected 'd' or 'x'");
        ++pos;
        term.interaction = kind == 'd' ? CfTerm::Interaction::Endogenous : CfTerm::Interaction::Exogenous;
        term.power = read_power(t, pos, 1);
    }
    if (pos != t.size()) throw InvalidArgument("CF term '" + t + "' has trailing characters");
    return term;
}

std::string power_suffix(int p) {
    return p == 1 ? "" : "^" + std::to_string(p);
}

}  // namespace

std::vector<CfTerm> parse_cf_terms(std::string_view text) {
    const std::string s = trim(text);
    if (s.empty() || s == "none") return {};
    if (s == "cf1") return parse_cf_terms("v+vd");
    if (s == "cf2") return parse_cf_terms("v+vd+vd2");
    std::vector<CfTerm> terms;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '+' || s[i] == ',') {
            terms.push_back(parse_term(std::string_view(s).substr(start, i - start)));
            start = i + 1;
        }
    }
    return terms;
}

CfModel make_cf_model(std::vector<CfTerm> terms, SkedasticSpec skedastic) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const CfTerm& t = terms[i];
        if (t.v_power < 1) throw InvalidArgument("every CF term needs a positive power of V");
        if (t.power < 0) throw InvalidArgument("CF interaction powers must be nonnegative");
        if (t.interaction == CfTerm::Interaction::Exogenous && t.power < 1) {
            throw InvalidArgument("X interactions need a power of at least 1");
        }
        if (std::find(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(i), t) !=
            terms.begin() + static_cast<std::ptrdiff_t>(i)) {
            throw InvalidArgument("duplicate CF term " + term_label(t, "d", "x"));
        }
    }
    return CfModel{std::move(terms), skedastic};
}

CfModel make_cf_model(std::string_view terms, SkedasticFamily family) {
    return make_cf_model(parse_cf_terms(terms), SkedasticSpec{family});
}

const std::vector<std::string>& cf_preset_names() {
    static const std::vector<std::string> names{"cf1", "cf2", "v", "v+v2", "v+vd", "v+vd+v2", "v+vd+v2+v2d"};
    return names;
}

std::string term_label(const CfTerm& term, const std::string& d_label, const std::string& x_label) {
    std::string label = "v" + power_suffix(term.v_power);
    if (term.interaction == CfTerm::Interaction::Endogenous) {
        if (term.power > 0) label += "*" + d_label + power_suffix(term.power);
    } else {
        label += "*" + x_label + power_suffix(term.power);
    }
    return label;
}

Eigen::Index cf_column_count(const CfModel& model, const Dataset& data) {
    const auto x_cols = static_cast<Eigen::Index>(data.nonconstant_x_columns().size());
    Eigen::Index k = 0;
    for (const auto& t : model.terms) k += t.interaction == CfTerm::Interaction::Endogenous ? 1 : x_cols;
    return k;
}

DesignMatrix build_regressors(const CfModel& model, const Dataset& data, const FirstStageFit& first_stage) {
    const Eigen::Index n = data.n();
    if (first_stage.v_hat.size() != n) throw InvalidArgument("first stage does not match the dataset");
    const auto x_cols = data.nonconstant_x_columns();
    const Eigen::Index k_cf = cf_column_count(model, data);
    const Eigen::Index k_base = 1 + data.p_x();

    MatrixXd values(n, k_base + k_cf);
    values.col(0) = data.d();
    values.middleCols(1, data.p_x()) = data.x();
    std::vector<std::string> labels{data.d_label()};
    labels.insert(labels.end(), data.x_labels().begin(), data.x_labels().end());

    const VectorXd& v = first_stage.v_hat;
    Eigen::Index c = k_base;
    for (const auto& t : model.terms) {
        const VectorXd vj = v.array().pow(t.v_power).matrix();
        if (t.interaction == CfTerm::Interaction::Endogenous) {
            values.col(c++) = t.power == 0 ? vj : VectorXd(vj.cwiseProduct(data.d().array().pow(t.power).matrix()));
            labels.push_back(term_label(t, data.d_label()));
        } else {
            for (Eigen::Index j : x_cols) {
                values.col(c++) = vj.cwiseProduct(data.x().col(j).array().pow(t.power).matrix());
                labels.push_back(term_label(t, data.d_label(), data.x_labels()[static_cast<std::size_t>(j)]));
            }
        }
    }

    for (Eigen::Index j = k_base; j < values.cols(); ++j) {
        const auto& label = labels[static_cast<std::size_t>(j)];
        for (Eigen::Index b = 0; b < k_base; ++b) {
            if (labels[static_cast<std::size_t>(b)] == label || values.col(j) == values.col(b)) {
                throw DuplicateColumn("CF column '" + label + "' duplicates regressor '" +
                                      labels[static_cast<std::size_t>(b)] + "'");
            }
        }
    }
    return DesignMatrix(std::move(values), std::move(labels));
}

RegressorJacobian regressor_jacobian(const CfModel& model, const Dataset& data,
                                     const FirstStageFit& first_stage) {
    const Eigen::Index n = data.n();
    const auto x_cols = data.nonconstant_x_columns();
    const Eigen::Index k_base = 1 + data.p_x();
    const Eigen::Index dim_r = k_base + cf_column_count(model, data);
    const SkedasticFit& sk = first_stage.skedastic;
    const Eigen::Index pz = data.p_z(), px = data.p_x(), pg = sk.gamma.size();
    if (sk.family != SkedasticFamily::Unit && sk.grad_h.rows() != n) {
        throw InvalidArgument("first stage lacks scale gradients");
    }

    RegressorJacobian jac;
    jac.term_factor = MatrixXd::Zero(n, dim_r);
    jac.dv_dphi.resize(n, pz + px + pg);

    const VectorXd& v = first_stage.v_hat;
    const VectorXd& h = sk.h_values;
    // dV/dpi1 = -Z/h, dV/dpi2 = -X/h, dV/dgamma = -V grad_h / h
    const VectorXd inv_h = h.cwiseInverse();
    jac.dv_dphi.leftCols(pz) = -(data.z().array().colwise() * inv_h.array()).matrix();
    jac.dv_dphi.middleCols(pz, px) = -(data.x().array().colwise() * inv_h.array()).matrix();
    if (pg > 0) {
        jac.dv_dphi.rightCols(pg) =
            -(sk.grad_h.array().colwise() * v.cwiseProduct(inv_h).array()).matrix();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(sk.fitted_variance(i) >= sk.variance_floor) || sk.fitted_variance(i) <= 0.0) ++jac.floored_rows;
        }
    }

    Eigen::Index c = k_base;
    for (const auto& t : model.terms) {
        const VectorXd dvj = t.v_power == 1 ? VectorXd::Ones(n)
                                            : VectorXd(t.v_power * v.array().pow(t.v_power - 1).matrix());
        if (t.interaction == CfTerm::Interaction::Endogenous) {
            jac.term_factor.col(c++) =
                t.power == 0 ? dvj : VectorXd(dvj.cwiseProduct(data.d().array().pow(t.power).matrix()));
        } else {
            for (Eigen::Index j : x_cols) {
                jac.term_factor.col(c++) = dvj.cwiseProduct(data.x().col(j).array().pow(t.power).matrix());
            }
        }
    }
    return jac;
}

}  // namespace cfhet
