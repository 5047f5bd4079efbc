#include "cli.hpp"

#include "csv_io.hpp"

#include "cfhet/baseline.hpp"
#include "cfhet/bootstrap.hpp"
#include "cfhet/control_function.hpp"
#include "cfhet/errors.hpp"
#include "cfhet/parallel.hpp"
#include "cfhet/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

namespace cfhet::cli {

using nlohmann::json;

namespace {

struct SharedOptions {
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    std::string out_path;
    std::string format;
    std::string config_path;
};

void add_shared(CLI::App* cmd, SharedOptions& s, const std::string& default_format) {
    s.format = default_format;
    cmd->add_option("--seed", s.seed, "RNG seed; drawn from OS entropy and logged when omitted");
    cmd->add_option("--workers", s.workers, "Worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("--out", s.out_path, "Write the report to this file instead of stdout");
    cmd->add_option("--format", s.format, "Report format")
        ->check(CLI::IsMember({"csv", "markdown", "json"}))
        ->capture_default_str();
    cmd->add_option("--config", s.config_path, "JSON file with flat keys mirroring the flags; flags win");
}

std::uint64_t resolve_seed(const SharedOptions& s, std::ostream& err) {
    if (s.seed) return *s.seed;
    std::random_device rd;
    const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    err << "seed: " << seed << " (drawn from OS entropy; pass --seed " << seed << " to reproduce)\n";
    return seed;
}

void emit(const std::string& text, const SharedOptions& s, std::ostream& out) {
    if (s.out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(s.out_path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + s.out_path + "'");
    f << text;
    if (!f) throw ConfigError("error while writing '" + s.out_path + "'");
}

std::string g17(double v) {
    if (std::isnan(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fixed(double v, int digits = 6) {
    if (std::isnan(v)) return "NA";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

json number_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json envelope(std::string_view command, std::uint64_t seed) {
    json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["seed"] = seed;
    j["estimate"] = nullptr;
    j["se_analytic"] = nullptr;
    j["se_bootstrap"] = nullptr;
    j["ci"] = nullptr;
    j["diagnostics"] = json::object();
    return j;
}

// ---------------------------------------------------------------- fit

struct FitOptions {
    SharedOptions shared;
    std::string csv;
    ColumnRoles roles;
    std::string estimator = "cf";
    std::string cf_terms = "cf1";
    std::string skedastic = "linear";
    std::size_t bootstrap = 0;
};

struct CoefficientRow {
    std::string term;
    double estimate = 0.0;
    double se = 0.0;
    double se_naive = std::nan("");
    double se_boot = std::nan("");
    double ci_low = std::nan("");
    double ci_high = std::nan("");
};

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
    const std::uint64_t seed = resolve_seed(o.shared, err);
    if (o.estimator != "ols" && o.estimator != "2sls" && o.estimator != "cf") {
        throw ConfigError("--estimator must be ols, 2sls or cf");
    }
    const SkedasticFamily family = parse_skedastic_family(o.skedastic);
    std::optional<CfModel> model;
    if (o.estimator == "cf") model = make_cf_model(o.cf_terms, family);

    const LoadedData loaded = load_dataset(o.csv, o.roles);
    const Dataset& data = loaded.data;
    if (loaded.rows_dropped > 0) err << "dropped " << loaded.rows_dropped << " rows with missing values\n";

    std::vector<CoefficientRow> rows;
    json diag;
    diag["n"] = data.n();
    diag["rows_read"] = loaded.rows_read;
    diag["rows_dropped"] = loaded.rows_dropped;
    diag["constant_added"] = loaded.constant_added;
    std::string description = o.estimator;
    CoefficientEstimator boot_estimator;

    std::vector<std::string> labels{data.d_label()};
    if (model) {
        const CfFit fit = fit_cf(data, *model);
        labels = fit.regressors.labels();
        const VectorXd coef = fit.coefficients();
        const VectorXd se = fit.sandwich.standard_errors();
        const VectorXd se_naive = fit.sandwich.standard_errors_naive();
        for (Eigen::Index k = 0; k < coef.size(); ++k) {
            rows.push_back({labels[static_cast<std::size_t>(k)], coef(k), se(k), se_naive(k)});
        }
        const auto& sk = fit.first_stage.skedastic;
        diag["first_stage_f"] = number_or_null(fit.first_stage.f_statistic);
        diag["weak_instrument"] = fit.first_stage.f_statistic < kWeakInstrumentF;
        diag["floored_variance_count"] = sk.floored_count;
        diag["skedastic_family"] = to_string(sk.family);
        diag["skedastic_gamma"] = std::vector<double>(sk.gamma.data(), sk.gamma.data() + sk.gamma.size());
        diag["skedastic_converged"] = sk.converged;
        diag["nls_iterations"] = sk.nls_iterations;
        diag["condition_number"] = number_or_null(fit.condition_number);
        diag["ill_conditioned"] = fit.condition_number > kConditionWarning;
        description += " (terms " + o.cf_terms + ", skedastic " + o.skedastic + ")";
        boot_estimator = [m = *model](const Dataset& d) {
            const CfFit f = fit_cf(d, m, CfOptions{false});
            if (!f.first_stage.skedastic.converged) throw NonConvergence("skedastic fit did not converge");
            return f.coefficients();
        };
    } else {
        const bool ols = o.estimator == "ols";
        const LinearFit fit = ols ? fit_ols(data) : fit_2sls(data);
        labels.insert(labels.end(), data.x_labels().begin(), data.x_labels().end());
        const VectorXd coef = fit.coefficients();
        for (Eigen::Index k = 0; k < coef.size(); ++k) {
            rows.push_back({labels[static_cast<std::size_t>(k)], coef(k), std::sqrt(fit.hc_variance(k, k))});
        }
        if (!ols) {
            diag["first_stage_f"] = number_or_null(fit.first_stage_f);
            diag["weak_instrument"] = fit.weak_instrument;
        }
        diag["condition_number"] = number_or_null(fit.condition_number);
        diag["ill_conditioned"] = fit.condition_number > kConditionWarning;
        boot_estimator = [ols](const Dataset& d) { return (ols ? fit_ols(d) : fit_2sls(d)).coefficients(); };
    }
    if (diag.contains("weak_instrument") && diag["weak_instrument"].get<bool>()) {
        err << "warning: first-stage F below " << kWeakInstrumentF << "; instruments may be weak\n";
    }

    if (o.bootstrap > 0) {
        BootstrapOptions bo;
        bo.replications = o.bootstrap;
        bo.seed = seed;
        bo.workers = resolve_workers(o.shared.workers);
        const BootstrapResult br = bootstrap(data, boot_estimator, bo);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            rows[k].se_boot = br.se(kk);
            rows[k].ci_low = br.ci_percentile(kk, 0);
            rows[k].ci_high = br.ci_percentile(kk, 1);
        }
        diag["bootstrap_replications"] = br.requested;
        diag["bootstrap_failures"] = br.failed_replicates;
    }

    std::string text;
    const CoefficientRow& head = rows.front();
    if (o.shared.format == "json") {
        json j = envelope("fit", seed);
        j["estimator"] = description;
        j["estimate"] = head.estimate;
        j["se_analytic"] = number_or_null(head.se);
        j["se_bootstrap"] = number_or_null(head.se_boot);
        j["ci"] = {{"analytic",
                    {head.estimate - kNormalQuantile975 * head.se, head.estimate + kNormalQuantile975 * head.se}},
                   {"bootstrap_percentile", std::isnan(head.ci_low) ? json(nullptr)
                                                                     : json{head.ci_low, head.ci_high}}};
        json coefs = json::array();
        for (const auto& r : rows) {
            coefs.push_back({{"term", r.term},
                             {"estimate", r.estimate},
                             {"se_analytic", number_or_null(r.se)},
                             {"se_naive", number_or_null(r.se_naive)},
                             {"se_bootstrap", number_or_null(r.se_boot)},
                             {"ci_bootstrap", std::isnan(r.ci_low) ? json(nullptr) : json{r.ci_low, r.ci_high}}});
        }
        j["coefficients"] = coefs;
        j["diagnostics"] = diag;
        text = j.dump(2) + "\n";
    } else if (o.shared.format == "csv") {
        std::ostringstream s;
        s << "term,estimate,se_analytic,se_naive,se_bootstrap,ci_low,ci_high\n";
        for (const auto& r : rows) {
            s << r.term << ',' << g17(r.estimate) << ',' << g17(r.se) << ',' << g17(r.se_naive) << ','
              << g17(r.se_boot) << ',' << g17(r.ci_low) << ',' << g17(r.ci_high) << '\n';
        }
        text = s.str();
    } else {
        std::ostringstream s;
        s << "Estimator: " << description << "\n";
        s << "Observations: " << data.n() << " (dropped " << loaded.rows_dropped << ")\n\n";
        s << "| term | estimate | se | se_naive | se_bootstrap | ci_low | ci_high |\n";
        s << "|:-----|---------:|---:|---------:|-------------:|-------:|--------:|\n";
        for (const auto& r : rows) {
            s << "| " << r.term << " | " << fixed(r.estimate) << " | " << fixed(r.se) << " | "
              << fixed(r.se_naive) << " | " << fixed(r.se_boot) << " | " << fixed(r.ci_low) << " | "
              << fixed(r.ci_high) << " |\n";
        }
        s << "\nDiagnostics: " << diag.dump() << "\n";
        text = s.str();
    }
    emit(text, o.shared, out);
    return kOk;
}

// ----------------------------------------------------------- simulate

struct SimulateOptions {
    SharedOptions shared;
    std::string preset;
    std::optional<double> lambda;
    std::optional<double> gamma1;
    std::vector<long> n_grid;
    std::vector<double> delta1_grid;
    std::vector<double> delta2_grid;
    std::size_t replications = 2000;
    std::optional<long> n;
    std::string emit_csv;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
    TableSpec spec = o.preset.empty() ? TableSpec{} : table_preset(o.preset);
    spec.seed = resolve_seed(o.shared, err);
    spec.replications = o.replications;
    if (o.lambda) spec.lambda = *o.lambda;
    if (o.gamma1) spec.gamma1 = *o.gamma1;
    if (!o.n_grid.empty()) spec.n_grid.assign(o.n_grid.begin(), o.n_grid.end());
    if (o.n) spec.n_grid = {*o.n};
    if (!o.delta1_grid.empty()) spec.delta1_grid = o.delta1_grid;
    if (!o.delta2_grid.empty()) spec.delta2_grid = o.delta2_grid;
    const std::vector<McConfig> configs = table_configs(spec);

    if (!o.emit_csv.empty()) write_dataset_csv(simulate_dgp(configs.front(), 0), o.emit_csv);

    const unsigned workers = resolve_workers(o.shared.workers);
    std::vector<TableCell> cells;
    for (const McConfig& c : configs) cells.push_back({c, run_mc(c, kAllEstimators, workers)});

    std::size_t failures = 0, floored = 0;
    for (const auto& cell : cells) {
        floored += cell.result.floored_variance_count;
        for (const auto& e : cell.result.estimators) failures += e.failures;
    }
    if (failures > 0) err << "warning: " << failures << " estimator replications failed and were excluded\n";

    std::string text;
    if (o.shared.format == "csv") {
        text = format_table_csv(cells);
    } else if (o.shared.format == "markdown") {
        text = format_table_markdown(spec, cells);
    } else {
        json j = envelope("simulate", spec.seed);
        j["diagnostics"] = {{"cells", cells.size()},
                            {"replications", spec.replications},
                            {"failed_replications", failures},
                            {"floored_variance_count", floored}};
        json results = json::array();
        for (const auto& cell : cells) {
            json est;
            for (const auto& e : cell.result.estimators) {
                est[std::string(to_string(e.estimator))] = {
                    {"bias", e.bias},
                    {"variance", e.variance},
                    {"mean_est_variance", e.mean_est_variance},
                    {"median_est_variance", e.median_est_variance},
                    {"mean_est_variance_naive", e.mean_est_variance_naive},
                    {"coverage95", e.coverage95},
                    {"coverage95_naive", e.coverage95_naive},
                    {"failures", e.failures}};
            }
            results.push_back({{"n", cell.config.n},
                               {"lambda", cell.config.lambda},
                               {"gamma1", cell.config.gamma1},
                               {"delta1", cell.config.delta1},
                               {"delta2", cell.config.delta2},
                               {"estimators", est}});
        }
        j["results"] = results;
        text = j.dump(2) + "\n";
    }
    emit(text, o.shared, out);
    return kOk;
}

// -------------------------------------------------------- bias-oracle

struct OracleOptions {
    SharedOptions shared;
    McConfig dgp;
    std::size_t draws = 10'000'000;
};

int cmd_bias_oracle(const OracleOptions& o, std::ostream& out, std::ostream& err) {
    const std::uint64_t seed = resolve_seed(o.shared, err);
    const BiasOracleResult r = bias_oracle_2sls(o.dgp, o.draws, seed, resolve_workers(o.shared.workers));
    const double lo = r.bias - kNormalQuantile975 * r.mc_standard_error;
    const double hi = r.bias + kNormalQuantile975 * r.mc_standard_error;

    std::string text;
    if (o.shared.format == "json") {
        json j = envelope("bias-oracle", seed);
        j["estimate"] = r.bias;
        j["se_analytic"] = r.mc_standard_error;
        j["ci"] = {lo, hi};
        j["diagnostics"] = {{"draws", r.mc_draws},
                            {"cross_moment", r.cross_moment},
                            {"sigma_h", r.sigma_h},
                            {"lambda", o.dgp.lambda},
                            {"gamma1", o.dgp.gamma1},
                            {"delta1", o.dgp.delta1},
                            {"delta2", o.dgp.delta2}};
        text = j.dump(2) + "\n";
    } else if (o.shared.format == "csv") {
        text = "lambda,gamma1,delta1,delta2,draws,bias,mc_se\n" + g17(o.dgp.lambda) + "," + g17(o.dgp.gamma1) +
               "," + g17(o.dgp.delta1) + "," + g17(o.dgp.delta2) + "," + std::to_string(r.mc_draws) + "," +
               g17(r.bias) + "," + g17(r.mc_standard_error) + "\n";
    } else {
        std::ostringstream s;
        s << "Asymptotic 2SLS bias (lambda=" << o.dgp.lambda << ", gamma1=" << o.dgp.gamma1
          << ", delta1=" << o.dgp.delta1 << ", delta2=" << o.dgp.delta2 << ")\n\n"
          << "| bias | mc_se | draws |\n|-----:|------:|------:|\n"
          << "| " << fixed(r.bias) << " | " << fixed(r.mc_standard_error, 8) << " | " << r.mc_draws << " |\n";
        text = s.str();
    }
    emit(text, o.shared, out);
    return kOk;
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

}  // namespace

std::vector<std::string> merge_config_file(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config file '" + path + "' must hold a JSON object");

    auto scalar = [&](const std::string& key, const json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
        if (v.is_number_float()) return g17(v.get<double>());
        throw ConfigError("config key '" + key + "' has an unsupported value type");
    };
    for (const auto& [key, value] : cfg.items()) {
        if (key == "config") throw ConfigError("config files cannot nest --config");
        const std::string flag = "--" + key;
        if (has_flag(args, flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& item : value) joined += (joined.empty() ? "" : ",") + scalar(key, item);
            args.push_back(flag);
            args.push_back(joined);
        } else if (!value.is_null()) {
            args.push_back(flag);
            args.push_back(scalar(key, value));
        }
    }
    return args;
}

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Control-function estimation under endogenous heteroskedasticity", "cfhet"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    FitOptions fit;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit OLS, 2SLS or a control-function model to CSV data");
    add_shared(fit_cmd, fit.shared, "markdown");
    fit_cmd->add_option("--csv", fit.csv, "Input CSV with a header row")->required();
    fit_cmd->add_option("--y", fit.roles.y, "Outcome column")->required();
    fit_cmd->add_option("--d", fit.roles.d, "Endogenous regressor column")->required();
    fit_cmd->add_option("--x", fit.roles.x, "Exogenous columns (a constant is added when absent)")->delimiter(',');
    fit_cmd->add_option("--z", fit.roles.z, "Instrument columns")->delimiter(',')->required();
    fit_cmd->add_option("--estimator", fit.estimator, "Estimator")
        ->check(CLI::IsMember({"ols", "2sls", "cf"}))
        ->capture_default_str();
    fit_cmd->add_option("--cf-terms", fit.cf_terms, "Preset (cf1, cf2, ...) or list such as v+vd+v2")
        ->capture_default_str();
    fit_cmd->add_option("--skedastic", fit.skedastic, "First-stage scale family")
        ->check(CLI::IsMember({"unit", "linear", "loglinear"}))
        ->capture_default_str();
    fit_cmd->add_option("--bootstrap", fit.bootstrap, "Pairs-bootstrap replications (0 = off)")
        ->capture_default_str();

    SimulateOptions sim;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo tables for OLS, 2SLS, CF1 and CF2");
    add_shared(sim_cmd, sim.shared, "csv");
    sim_cmd->add_option("--preset", sim.preset, "Built-in table design; explicit flags override it")->check(CLI::IsMember({"table1", "table2", "table3", "table4"}));
    sim_cmd->add_option("--lambda", sim.lambda, "Endogeneity strength");
    sim_cmd->add_option("--gamma1", sim.gamma1, "First-stage heteroskedasticity");
    sim_cmd->add_option("--n-grid", sim.n_grid, "Sample sizes, comma separated")->delimiter(',');
    sim_cmd->add_option("--delta1-grid", sim.delta1_grid, "Structural scale coefficients on D")->delimiter(',');
    sim_cmd->add_option("--delta2-grid", sim.delta2_grid, "Structural scale coefficients on D^2")->delimiter(',');
    sim_cmd->add_option("--replications", sim.replications, "Replications per cell")->capture_default_str();
    sim_cmd->add_option("--n", sim.n, "Single sample size (replaces the n grid)");
    sim_cmd->add_option("--emit-csv", sim.emit_csv, "Also write replication 0 of the first cell as CSV");

    OracleOptions orc;
    CLI::App* orc_cmd = app.add_subcommand("bias-oracle", "Probability limit of the 2SLS bias by simulation");
    add_shared(orc_cmd, orc.shared, "markdown");
    orc_cmd->add_option("--draws", orc.draws, "Simulation draws")->capture_default_str();
    orc_cmd->add_option("--lambda", orc.dgp.lambda, "Endogeneity strength")->capture_default_str();
    orc_cmd->add_option("--gamma1", orc.dgp.gamma1, "First-stage heteroskedasticity")->capture_default_str();
    orc_cmd->add_option("--delta1", orc.dgp.delta1, "Structural scale coefficient on D")->capture_default_str();
    orc_cmd->add_option("--delta2", orc.dgp.delta2, "Structural scale coefficient on D^2")->capture_default_str();
    orc_cmd->add_option("--delta3", orc.dgp.delta3, "Structural scale intercept")->capture_default_str();
    orc_cmd->add_option("--pi1", orc.dgp.pi1, "First-stage coefficient on Z")->capture_default_str();
    orc_cmd->add_option("--pi2", orc.dgp.pi2, "First-stage intercept")->capture_default_str();
    orc_cmd->add_option("--gamma2", orc.dgp.gamma2, "First-stage scale intercept")->capture_default_str();

    try {
        args = merge_config_file(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(fit, out, err);
        if (sim_cmd->parsed()) return cmd_simulate(sim, out, err);
        return cmd_bias_oracle(orc, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const InvalidArgument& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const NonFiniteInput& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const Error& e) {
        err << "estimation error: " << e.what() << "\n";
        return kEstimationError;
    }
}

}  // namespace cfhet::cli
