#pragma once

#include "cfhet/cf_model.hpp"
#include "cfhet/dataset.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace cfhet {

struct BootstrapResult {
    /// One row per successful replicate, in replicate order.
    MatrixXd replicates;
    VectorXd se;
    /// k x 2 matrix of (2.5%, 97.5%) percentile bounds.
    MatrixXd ci_percentile;
    std::size_t requested = 0;
    std::size_t failed_replicates = 0;

    std::size_t effective() const { return requested - failed_replicates; }
};

using CoefficientEstimator = std::function<VectorXd(const Dataset&)>;
/// Row indices for replicate b of a sample of size n.
using IndexSampler = std::function<std::vector<std::size_t>(std::size_t replicate, std::size_t n)>;

struct BootstrapOptions {
    std::size_t replications = 200;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    /// Defaults to uniform resampling with replacement from a per-replicate substream.
    IndexSampler sampler;
};

/// Sampler that returns 0..n-1 unchanged; lets tests pin every replicate to the original sample.
IndexSampler identity_sampler();

/// Pairs bootstrap. Replicates whose estimator throws RankDeficient,
/// NonConvergence, AllResidualsZero or DuplicateColumn are dropped and counted;
/// more than B/2 failures raises TooManyFailures.
BootstrapResult bootstrap(const Dataset& data, const CoefficientEstimator& estimator,
                          const BootstrapOptions& options);

/// Re-runs the full two-step CF pipeline on every resample.
BootstrapResult bootstrap(const Dataset& data, const CfModel& model, const BootstrapOptions& options);

/// Type-7 (linear interpolation) empirical quantile.
double quantile_type7(std::vector<double> values, double p);

}  // namespace cfhet
