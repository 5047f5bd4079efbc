#include "cfhet/errors.hpp"
#include "cfhet/skedastic.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace cfhet;
using cfhet::testing::random_dataset;
using cfhet::testing::rel_diff;

namespace {

Dataset with_covariates(const MatrixXd& z, const MatrixXd& x_nonconst) {
    const Eigen::Index n = z.rows();
    MatrixXd x(n, 1 + x_nonconst.cols());
    x << VectorXd::Ones(n), x_nonconst;
    std::vector<std::string> xl{"const"}, zl;
    for (Eigen::Index j = 0; j < x_nonconst.cols(); ++j) xl.push_back("x" + std::to_string(j + 1));
    for (Eigen::Index j = 0; j < z.cols(); ++j) zl.push_back("z" + std::to_string(j + 1));
    return Dataset(VectorXd::Zero(n), VectorXd::LinSpaced(n, 0.0, 1.0), x, xl, z, zl);
}

double nls_objective(const VectorXd& s, const MatrixXd& w, const VectorXd& g) {
    return (s - (w * g).array().exp().matrix()).squaredNorm();
}

}  // namespace

TEST_CASE("family names round-trip") {
    for (auto f : {SkedasticFamily::Unit, SkedasticFamily::LinearPower, SkedasticFamily::LogLinear}) {
        CHECK(parse_skedastic_family(to_string(f)) == f);
    }
    CHECK_THROWS_AS(parse_skedastic_family("quadratic"), InvalidArgument);
}

TEST_CASE("unit family has no parameters and unit scale") {
    const Dataset data = random_dataset(50, 2, 1, 1);
    const SkedasticFit fit = fit_skedastic({SkedasticFamily::Unit}, data.d().cwiseAbs2(), data);
    CHECK(fit.gamma.size() == 0);
    CHECK(fit.grad_h.cols() == 0);
    CHECK((fit.h_values.array() == 1.0).all());
}

TEST_CASE("constant squared residuals give an intercept-only linear fit") {
    const Dataset data = random_dataset(80, 2, 2, 1);
    const SkedasticFit fit = fit_skedastic({SkedasticFamily::LinearPower}, VectorXd::Constant(80, 2.25), data);
    REQUIRE(fit.gamma.size() == 4);
    CHECK(fit.gamma(0) == doctest::Approx(2.25).epsilon(1e-12));
    CHECK(fit.gamma.tail(3).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fit.h_values.array() - 1.5).abs().maxCoeff() < 1e-12);
    CHECK(fit.feature_labels == std::vector<std::string>{"const", "|z1|", "|z2|", "|x1|"});
}

TEST_CASE("gradient examples") {
    const VectorXd w = (VectorXd(3) << 1, 0, 0).finished();
    const auto lp = grad_h(SkedasticFamily::LinearPower, (VectorXd(3) << 4, 0, 0).finished(), w.transpose(), 1e-8);
    CHECK(lp.h == doctest::Approx(2.0));
    CHECK(lp.gradient(0) == doctest::Approx(0.25));
    CHECK(lp.gradient.tail(2).isZero());
    const auto ll = grad_h(SkedasticFamily::LogLinear, VectorXd::Zero(3), w.transpose(), 1e-8);
    CHECK(ll.h == doctest::Approx(1.0));
    CHECK(ll.gradient(0) == doctest::Approx(0.5));
    CHECK(ll.gradient.tail(2).isZero());
}

TEST_CASE("analytic gradient matches central differences of h and of h squared") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unif(0.2, 2.0), coef(-0.5, 0.5);
    for (auto family : {SkedasticFamily::LinearPower, SkedasticFamily::LogLinear}) {
        for (int trial = 0; trial < 50; ++trial) {
            Eigen::RowVectorXd w(3);
            w << 1.0, unif(rng), unif(rng);
            if (family == SkedasticFamily::LogLinear) w.tail(2) = w.tail(2).array().log();
            VectorXd gamma(3);
            gamma << 1.0 + unif(rng), coef(rng), coef(rng);
            const auto g = grad_h(family, gamma, w, 1e-12);
            REQUIRE_FALSE(g.floored);
            for (Eigen::Index j = 0; j < 3; ++j) {
                const double step = 1e-6 * (1.0 + std::abs(gamma(j)));
                VectorXd up = gamma, dn = gamma;
                up(j) += step;
                dn(j) -= step;
                const double hu = std::sqrt(skedastic_variance(family, up, w));
                const double hd = std::sqrt(skedastic_variance(family, dn, w));
                const double fd = (hu - hd) / (2.0 * step);
                CHECK(std::abs(g.gradient(j) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
                const double fd_sq = (hu * hu - hd * hd) / (2.0 * step);
                CHECK(std::abs(2.0 * g.h * g.gradient(j) - fd_sq) <= 1e-5 * std::max(1.0, std::abs(fd_sq)));
            }
        }
    }
}

TEST_CASE("linear fit residuals sum to zero before flooring") {
    const Dataset data = random_dataset(500, 1, 7, 1);
    const VectorXd s = (data.d().array() - data.d().mean()).square().matrix();
    const SkedasticFit fit = fit_skedastic({SkedasticFamily::LinearPower}, s, data);
    CHECK(std::abs((s - fit.fitted_variance).sum()) < 1e-8 * s.sum());
}

TEST_CASE("negative fitted variances are floored and counted") {
    const Eigen::Index n = 40;
    MatrixXd z(n, 1);
    VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        z(i, 0) = static_cast<double>(i) / 10.0;
        s(i) = std::max(0.0, 3.0 - z(i, 0));
    }
    const SkedasticFit fit = fit_skedastic({SkedasticFamily::LinearPower}, s, with_covariates(z, MatrixXd(n, 0)));
    CHECK(fit.floored_count > 0);
    CHECK(fit.variance_floor == doctest::Approx(1e-8 * s.mean()));
    CHECK(fit.h_values.minCoeff() == doctest::Approx(std::sqrt(fit.variance_floor)));
    CHECK(fit.grad_h.allFinite());
}

TEST_CASE("all-zero residuals are rejected") {
    const Dataset data = random_dataset(30, 1, 3);
    CHECK_THROWS_AS(fit_skedastic({SkedasticFamily::LinearPower}, VectorXd::Zero(30), data), AllResidualsZero);
    CHECK_THROWS_AS(fit_skedastic({SkedasticFamily::LogLinear}, VectorXd::Zero(30), data), AllResidualsZero);
}

TEST_CASE("fits are invariant to row permutation") {
    const Dataset data = random_dataset(300, 1, 9, 1);
    const VectorXd s = (data.d().array() - data.d().mean()).square().matrix();
    std::vector<std::size_t> perm(300);
    for (std::size_t i = 0; i < 300; ++i) perm[i] = (i * 7 + 3) % 300;
    const Dataset p = data.resample(perm);
    VectorXd sp(300);
    for (std::size_t i = 0; i < 300; ++i) sp(static_cast<Eigen::Index>(i)) = s(static_cast<Eigen::Index>(perm[i]));
    for (auto family : {SkedasticFamily::LinearPower, SkedasticFamily::LogLinear}) {
        const auto a = fit_skedastic({family}, s, data);
        const auto b = fit_skedastic({family}, sp, p);
        for (Eigen::Index j = 0; j < a.gamma.size(); ++j) CHECK(rel_diff(a.gamma(j), b.gamma(j)) < 1e-8);
    }
}

TEST_CASE("log-linear NLS recovers known parameters and beats a brute-force lattice") {
    const Eigen::Index n = 100000;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> nd;
    MatrixXd z(n, 1), x(n, 1);
    VectorXd s(n);
    const Eigen::Vector3d truth(0.3, 0.5, -0.4);
    for (Eigen::Index i = 0; i < n; ++i) {
        z(i, 0) = std::abs(nd(rng)) + 0.05;
        x(i, 0) = 0.2 + std::abs(nd(rng));
        const double w_gamma = truth(0) + truth(1) * std::log(z(i, 0)) + truth(2) * std::log(x(i, 0));
        const double v = nd(rng);
        s(i) = std::exp(w_gamma) * v * v;
    }
    const Dataset data = with_covariates(z, x);
    const SkedasticFit fit = fit_skedastic({SkedasticFamily::LogLinear}, s, data);
    REQUIRE(fit.converged);
    const MatrixXd& w = fit.features;

    // NLS sandwich at the estimate, assembled directly from its definition.
    const VectorXd e = (w * fit.gamma).array().exp().matrix();
    const MatrixXd g = w.array().colwise() * e.array();
    const MatrixXd gr = g.array().colwise() * (s - e).array();
    const MatrixXd a_inv = (g.transpose() * g).inverse();
    const MatrixXd cov = a_inv * (gr.transpose() * gr) * a_inv;
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(fit.gamma(j) - truth(j)) < 3.0 * std::sqrt(cov(j, j)));

    // Coarse lattice (step 0.04) around the truth, then a step-0.01 lattice around the coarse winner.
    auto search = [&](const Eigen::Vector3d& centre, double step, int half) {
        Eigen::Vector3d best = centre;
        double best_obj = std::numeric_limits<double>::infinity();
        for (int a = -half; a <= half; ++a)
            for (int b = -half; b <= half; ++b)
                for (int c = -half; c <= half; ++c) {
                    const Eigen::Vector3d cand = centre + step * Eigen::Vector3d(a, b, c);
                    const double obj = nls_objective(s, w, cand);
                    if (obj < best_obj) best_obj = obj, best = cand;
                }
        return std::pair{best, best_obj};
    };
    const auto coarse = search(truth, 0.04, 5);
    const auto [lattice, lattice_obj] = search(coarse.first, 0.01, 4);
    CHECK(nls_objective(s, w, fit.gamma) <= lattice_obj);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(fit.gamma(j) - lattice(j)) <= 0.02);
}
