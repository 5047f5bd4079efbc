#include "cfhet/bootstrap.hpp"

#include "cfhet/control_function.hpp"
#include "cfhet/errors.hpp"
#include "cfhet/parallel.hpp"
#include "cfhet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace cfhet {

IndexSampler identity_sampler() {
    return [](std::size_t, std::size_t n) {
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        return rows;
    };
}

double quantile_type7(std::vector<double> values, double p) {
    if (values.empty()) throw InvalidArgument("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapResult bootstrap(const Dataset& data, const CoefficientEstimator& estimator,
                          const BootstrapOptions& options) {
    const std::size_t b_total = options.replications;
    if (b_total < 2) throw InvalidArgument("bootstrap needs at least 2 replications");
    const auto n = static_cast<std::size_t>(data.n());

    IndexSampler sampler = options.sampler;
    if (!sampler) {
        const std::uint64_t seed = options.seed;
        sampler = [seed](std::size_t b, std::size_t rows) {
            Engine engine = make_stream(seed, b, StreamTag::Bootstrap);
            std::uniform_int_distribution<std::size_t> pick(0, rows - 1);
            std::vector<std::size_t> idx(rows);
            for (auto& i : idx) i = pick(engine);
            return idx;
        };
    }

    std::vector<std::optional<VectorXd>> draws(b_total);
    parallel_for(b_total, options.workers, [&](std::size_t b) {
        const std::vector<std::size_t> rows = sampler(b, n);
        try {
            draws[b] = estimator(data.resample(rows));
        } catch (const RankDeficient&) {
        } catch (const NonConvergence&) {
        } catch (const AllResidualsZero&) {
        } catch (const DuplicateColumn&) {
        }
    });

    Eigen::Index k = -1;
    for (const auto& d : draws) {
        if (d) {
            k = d->size();
            break;
        }
    }
    BootstrapResult out;
    out.requested = b_total;
    std::vector<const VectorXd*> ok;
    for (const auto& d : draws) {
        if (d && d->size() == k) ok.push_back(&*d);
    }
    out.failed_replicates = b_total - ok.size();
    if (out.failed_replicates * 2 > b_total || ok.empty()) {
        throw TooManyFailures(out.failed_replicates, b_total);
    }

    out.replicates.resize(static_cast<Eigen::Index>(ok.size()), k);
    for (std::size_t r = 0; r < ok.size(); ++r) out.replicates.row(static_cast<Eigen::Index>(r)) = ok[r]->transpose();

    const auto m = static_cast<double>(ok.size());
    out.se.resize(k);
    out.ci_percentile.resize(k, 2);
    for (Eigen::Index j = 0; j < k; ++j) {
        const VectorXd col = out.replicates.col(j);
        const double mean = col.mean();
        out.se(j) = ok.size() > 1 ? std::sqrt((col.array() - mean).square().sum() / (m - 1.0)) : 0.0;
        std::vector<double> vals(col.data(), col.data() + col.size());
        out.ci_percentile(j, 0) = quantile_type7(vals, 0.025);
        out.ci_percentile(j, 1) = quantile_type7(vals, 0.975);
    }
    return out;
}

BootstrapResult bootstrap(const Dataset& data, const CfModel& model, const BootstrapOptions& options) {
    const CoefficientEstimator estimator = [&model](const Dataset& sample) {
        const CfFit fit = fit_cf(sample, model, CfOptions{.compute_inference = false});
        if (!fit.first_stage.skedastic.converged) throw NonConvergence("skedastic fit did not converge");
        return fit.coefficients();
    };
    return bootstrap(data, estimator, options);
}

}  // namespace cfhet
