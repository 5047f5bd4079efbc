#pragma once

#include "cfhet/dgp.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace cfhet {

enum class Estimator { Ols, Tsls, Cf1, Cf2 };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);
inline const std::vector<Estimator> kAllEstimators{Estimator::Ols, Estimator::Tsls, Estimator::Cf1, Estimator::Cf2};

/// Monte Carlo moments of alpha1-hat for one estimator. Estimated variances are
/// on the scale of the estimator's sampling variance (Omega_11 / n for CF, the
/// HC0 diagonal for OLS and 2SLS).
struct EstimatorSummary {
    Estimator estimator = Estimator::Ols;
    std::size_t successes = 0;
    std::size_t failures = 0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double variance = 0.0;
    double mean_est_variance = 0.0;
    double median_est_variance = 0.0;
    /// CF only: same quantities without the generated-regressor correction.
    double mean_est_variance_naive = 0.0;
    double coverage95 = 0.0;
    double coverage95_naive = 0.0;
};

struct McResult {
    McConfig config;
    std::vector<EstimatorSummary> estimators;
    /// Observations whose fitted first-stage variance hit the floor, summed over CF replications.
    std::size_t floored_variance_count = 0;

    const EstimatorSummary& get(Estimator e) const;
};

/// Per-replication output, exposed for tests that need the raw draws.
struct McDraws {
    std::vector<Estimator> estimators;
    /// estimates[e][r]; NaN marks a failed replication.
    std::vector<std::vector<double>> estimates;
    std::vector<std::vector<double>> est_variance;
    std::vector<std::vector<double>> est_variance_naive;
    std::vector<std::size_t> floored;
};

/// CF estimators use the LinearPower scale model, i.e. V-tilde^2 regressed on (1, |Z|).
McDraws run_mc_draws(const McConfig& config, const std::vector<Estimator>& estimators, unsigned workers = 1);

/// Replications run in parallel; moments are reduced in replication order, so
/// the result is bitwise identical for any worker count.
McResult run_mc(const McConfig& config, const std::vector<Estimator>& estimators = kAllEstimators,
                unsigned workers = 1);
McResult summarize(const McConfig& config, const McDraws& draws);

/// Grid over (n, delta1, delta2) at fixed (lambda, gamma1). Every cell shares
/// the same seed, so replication r of different cells reuses the same innovations.
struct TableSpec {
    std::string name = "custom";
    double lambda = 1.0;
    double gamma1 = 0.0;
    std::vector<Eigen::Index> n_grid{250, 500, 1000};
    std::vector<double> delta1_grid{0.0, 1.0};
    std::vector<double> delta2_grid{0.0, 0.2};
    std::size_t replications = 2000;
    std::uint64_t seed = 1;
};

/// "table1": lambda=1, gamma1=0; "table2": 1, 1; "table3": 0, 0; "table4": 0, 1.
TableSpec table_preset(std::string_view name);

struct TableCell {
    McConfig config;
    McResult result;
};

/// Cells ordered by delta1, then delta2, then n.
std::vector<McConfig> table_configs(const TableSpec& spec);
std::vector<TableCell> run_table(const TableSpec& spec, unsigned workers = 1);

/// One row per cell per CF block (CF1 rows first, then CF2).
std::string format_table_csv(const std::vector<TableCell>& cells);
/// Two aligned Markdown blocks in the standard two-block table layout.
std::string format_table_markdown(const TableSpec& spec, const std::vector<TableCell>& cells);

}  // namespace cfhet
