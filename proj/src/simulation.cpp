#include "cfhet/simulation.hpp"

#include "cfhet/baseline.hpp"
#include "cfhet/control_function.hpp"
#include "cfhet/errors.hpp"
#include "cfhet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cfhet {

std::string_view to_string(Estimator e) {
    switch (e) {
        case Estimator::Ols: return "ols";
        case Estimator::Tsls: return "2sls";
        case Estimator::Cf1: return "cf1";
        case Estimator::Cf2: return "cf2";
    }
    return "unknown";
}

Estimator parse_estimator(std::string_view name) {
    for (Estimator e : kAllEstimators) {
        if (to_string(e) == name) return e;
    }
    throw InvalidArgument("unknown estimator '" + std::string(name) + "'");
}

const EstimatorSummary& McResult::get(Estimator e) const {
    for (const auto& s : estimators) {
        if (s.estimator == e) return s;
    }
    throw InvalidArgument("estimator " + std::string(to_string(e)) + " was not simulated");
}

McDraws run_mc_draws(const McConfig& config, const std::vector<Estimator>& estimators, unsigned workers) {
    config.validate();
    const std::size_t reps = config.replications;
    const std::size_t k = estimators.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    McDraws out;
    out.estimators = estimators;
    out.estimates.assign(k, std::vector<double>(reps, nan));
    out.est_variance.assign(k, std::vector<double>(reps, nan));
    out.est_variance_naive.assign(k, std::vector<double>(reps, nan));
    out.floored.assign(reps, 0);

    const bool need_cf = std::any_of(estimators.begin(), estimators.end(),
                                     [](Estimator e) { return e == Estimator::Cf1 || e == Estimator::Cf2; });
    const SkedasticSpec spec{SkedasticFamily::LinearPower};
    const CfModel cf1 = make_cf_model("cf1", spec.family);
    const CfModel cf2 = make_cf_model("cf2", spec.family);

    parallel_for(reps, workers, [&](std::size_t r) {
        const Dataset data = simulate_dgp(config, r);
        std::optional<FirstStageFit> first;
        if (need_cf) {
            try {
                first = fit_first_stage(data, spec);
                out.floored[r] = first->skedastic.floored_count;
            } catch (const Error&) {
            }
        }
        for (std::size_t e = 0; e < k; ++e) {
            try {
                switch (estimators[e]) {
                    case Estimator::Ols:
                    case Estimator::Tsls: {
                        const LinearFit fit = estimators[e] == Estimator::Ols ? fit_ols(data) : fit_2sls(data);
                        out.estimates[e][r] = fit.alpha1;
                        out.est_variance[e][r] = fit.hc_variance(0, 0);
                        out.est_variance_naive[e][r] = fit.hc_variance(0, 0);
                        break;
                    }
                    case Estimator::Cf1:
                    case Estimator::Cf2: {
                        if (!first) break;
                        const CfFit fit = fit_cf(data, estimators[e] == Estimator::Cf1 ? cf1 : cf2, *first);
                        const double nd = static_cast<double>(data.n());
                        out.estimates[e][r] = fit.alpha1;
                        out.est_variance[e][r] = fit.omega()(0, 0) / nd;
                        out.est_variance_naive[e][r] = fit.omega_naive()(0, 0) / nd;
                        break;
                    }
                }
            } catch (const Error&) {
                out.estimates[e][r] = nan;
            }
            if (!std::isfinite(out.est_variance[e][r])) out.estimates[e][r] = nan;
        }
    });
    return out;
}

McResult summarize(const McConfig& config, const McDraws& draws) {
    McResult result;
    result.config = config;
    for (std::size_t r = 0; r < draws.floored.size(); ++r) result.floored_variance_count += draws.floored[r];

    for (std::size_t e = 0; e < draws.estimators.size(); ++e) {
        EstimatorSummary s;
        s.estimator = draws.estimators[e];
        std::vector<double> est, var, var_naive;
        for (std::size_t r = 0; r < draws.estimates[e].size(); ++r) {
            if (std::isnan(draws.estimates[e][r])) {
                ++s.failures;
                continue;
            }
            est.push_back(draws.estimates[e][r]);
            var.push_back(draws.est_variance[e][r]);
            var_naive.push_back(draws.est_variance_naive[e][r]);
        }
        s.successes = est.size();
        if (!est.empty()) {
            const auto m = static_cast<double>(est.size());
            double sum = 0.0, sum_var = 0.0, sum_var_naive = 0.0;
            std::size_t covered = 0, covered_naive = 0;
            for (std::size_t i = 0; i < est.size(); ++i) {
                sum += est[i];
                sum_var += var[i];
                sum_var_naive += var_naive[i];
                const double err = std::abs(est[i] - config.alpha1);
                if (err <= kNormalQuantile975 * std::sqrt(var[i])) ++covered;
                if (err <= kNormalQuantile975 * std::sqrt(var_naive[i])) ++covered_naive;
            }
            s.mean_estimate = sum / m;
            s.bias = s.mean_estimate - config.alpha1;
            double ss = 0.0;
            for (double x : est) ss += (x - s.mean_estimate) * (x - s.mean_estimate);
            s.variance = est.size() > 1 ? ss / (m - 1.0) : 0.0;
            s.mean_est_variance = sum_var / m;
            s.mean_est_variance_naive = sum_var_naive / m;
            std::vector<double> sorted = var;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t mid = sorted.size() / 2;
            s.median_est_variance = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
            s.coverage95 = static_cast<double>(covered) / m;
            s.coverage95_naive = static_cast<double>(covered_naive) / m;
        }
        result.estimators.push_back(s);
    }
    return result;
}

McResult run_mc(const McConfig& config, const std::vector<Estimator>& estimators, unsigned workers) {
    return summarize(config, run_mc_draws(config, estimators, workers));
}

TableSpec table_preset(std::string_view name) {
    TableSpec spec;
    spec.name = std::string(name);
    if (name == "table1") {
        spec.lambda = 1.0, spec.gamma1 = 0.0;
    } else if (name == "table2") {
        spec.lambda = 1.0, spec.gamma1 = 1.0;
    } else if (name == "table3") {
        spec.lambda = 0.0, spec.gamma1 = 0.0;
    } else if (name == "table4") {
        spec.lambda = 0.0, spec.gamma1 = 1.0;
    } else {
        throw InvalidArgument("unknown table preset '" + std::string(name) + "' (expected table1..table4)");
    }
    return spec;
}

std::vector<McConfig> table_configs(const TableSpec& spec) {
    if (spec.n_grid.empty() || spec.delta1_grid.empty() || spec.delta2_grid.empty()) {
        throw InvalidArgument("table grids must be non-empty");
    }
    std::vector<McConfig> out;
    for (double d1 : spec.delta1_grid) {
        for (double d2 : spec.delta2_grid) {
            for (Eigen::Index n : spec.n_grid) {
                McConfig c;
                c.n = n;
                c.replications = spec.replications;
                c.lambda = spec.lambda;
                c.gamma1 = spec.gamma1;
                c.delta1 = d1;
                c.delta2 = d2;
                c.seed = spec.seed;
                c.validate();
                out.push_back(c);
            }
        }
    }
    return out;
}

std::vector<TableCell> run_table(const TableSpec& spec, unsigned workers) {
    std::vector<TableCell> cells;
    for (const McConfig& c : table_configs(spec)) cells.push_back({c, run_mc(c, kAllEstimators, workers)});
    return cells;
}

namespace {

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string num(double v) {
    return fmt("%.6f", v);
}

std::string short_num(double v) {
    // Avoid "-0.000" in three-decimal tables.
    const std::string s = fmt("%.3f", v);
    return s == "-0.000" ? "0.000" : s;
}

}  // namespace

std::string format_table_csv(const std::vector<TableCell>& cells) {
    std::ostringstream out;
    out << "block,n,lambda,gamma1,delta1,delta2,replications,ols_bias,ols_var,tsls_bias,tsls_var,"
           "cf_bias,cf_var,cf_est_var,cf_cov95,cf_est_var_naive,cf_cov95_naive,cf_est_var_median,"
           "cf_failures\n";
    for (Estimator block : {Estimator::Cf1, Estimator::Cf2}) {
        for (const auto& cell : cells) {
            const McResult& r = cell.result;
            const auto& ols = r.get(Estimator::Ols);
            const auto& tsls = r.get(Estimator::Tsls);
            const auto& cf = r.get(block);
            out << to_string(block) << ',' << cell.config.n << ',' << num(cell.config.lambda) << ','
                << num(cell.config.gamma1) << ',' << num(cell.config.delta1) << ',' << num(cell.config.delta2)
                << ',' << cell.config.replications << ',' << num(ols.bias) << ',' << num(ols.variance) << ','
                << num(tsls.bias) << ',' << num(tsls.variance) << ',' << num(cf.bias) << ','
                << num(cf.variance) << ',' << num(cf.mean_est_variance) << ',' << num(cf.coverage95) << ','
                << num(cf.mean_est_variance_naive) << ',' << num(cf.coverage95_naive) << ','
                << num(cf.median_est_variance) << ',' << cf.failures << '\n';
        }
    }
    return out.str();
}

std::string format_table_markdown(const TableSpec& spec, const std::vector<TableCell>& cells) {
    std::ostringstream out;
    out << "Monte Carlo simulations, lambda=" << short_num(spec.lambda) << ", gamma1=" << short_num(spec.gamma1)
        << " (" << spec.replications << " replications)\n\n";
    for (Estimator block : {Estimator::Cf1, Estimator::Cf2}) {
        const char* title = block == Estimator::Cf1 ? "CF1: V + V*D" : "CF2: V + V*D + V*D^2";
        out << "### " << title << "\n\n";
        out << "|    n | delta1 | delta2 | OLS Bias | OLS Var. | 2SLS Bias | 2SLS Var. |  CF Bias |  CF Var. | "
               "Est.Var | Cov.95% |\n";
        out << "|-----:|-------:|-------:|---------:|---------:|----------:|----------:|---------:|---------:|"
               "--------:|--------:|\n";
        for (const auto& cell : cells) {
            const McResult& r = cell.result;
            const auto& ols = r.get(Estimator::Ols);
            const auto& tsls = r.get(Estimator::Tsls);
            const auto& cf = r.get(block);
            char line[256];
            std::snprintf(line, sizeof line, "| %4ld | %6s | %6s | %8s | %8s | %9s | %9s | %8s | %8s | %7s | %7s |\n",
                          static_cast<long>(cell.config.n), fmt("%g", cell.config.delta1).c_str(),
                          fmt("%g", cell.config.delta2).c_str(), short_num(ols.bias).c_str(),
                          short_num(ols.variance).c_str(), short_num(tsls.bias).c_str(),
                          short_num(tsls.variance).c_str(), short_num(cf.bias).c_str(),
                          short_num(cf.variance).c_str(), short_num(cf.mean_est_variance).c_str(),
                          short_num(cf.coverage95).c_str());
            out << line;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace cfhet
