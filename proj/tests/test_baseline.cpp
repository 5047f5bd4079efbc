#include "cfhet/baseline.hpp"
#include "cfhet/dgp.hpp"
#include "cfhet/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace cfhet;
using cfhet::testing::random_dataset;
using cfhet::testing::rel_diff;

namespace {

// Textbook HC0 written out row by row, independent of the library's matrix form.
MatrixXd hc0_by_rows(const MatrixXd& a, const VectorXd& u) {
    const Eigen::Index k = a.cols();
    MatrixXd bread = MatrixXd::Zero(k, k), meat = MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const VectorXd r = a.row(i).transpose();
        bread += r * r.transpose();
        meat += u(i) * u(i) * r * r.transpose();
    }
    const MatrixXd inv = bread.inverse();
    return inv * meat * inv;
}

}  // namespace

TEST_CASE("OLS recovers exact coefficients without noise") {
    const Dataset base = random_dataset(50, 1, 3, 1);
    const VectorXd y = 2.0 * base.d() + 0.5 * base.x().col(0) - 1.5 * base.x().col(1);
    const LinearFit fit = fit_ols(base.with_outcomes(y, base.d()));
    CHECK(fit.alpha1 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.alpha2(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.alpha2(1) == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(fit.residuals.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("OLS HC0 variance matches a row-by-row implementation") {
    const Dataset data = random_dataset(400, 2, 17, 1);
    const LinearFit fit = fit_ols(data);
    const MatrixXd expect = hc0_by_rows(data.structural_design().values(), fit.residuals);
    CHECK((fit.hc_variance - expect).cwiseAbs().maxCoeff() < 1e-12 * expect.cwiseAbs().maxCoeff());
    CHECK((fit.hc_variance - fit.hc_variance.transpose()).norm() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(fit.hc_variance).eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("2SLS with the regressor as its own instrument equals OLS") {
    const Dataset base = random_dataset(300, 1, 5, 2);
    const Dataset self(base.y(), base.d(), base.x(), base.x_labels(), MatrixXd(base.d()), {"dz"});
    const LinearFit tsls = fit_2sls(self);
    const LinearFit ols = fit_ols(self);
    CHECK(rel_diff(tsls.alpha1, ols.alpha1) < 1e-10);
    for (Eigen::Index j = 0; j < ols.alpha2.size(); ++j) CHECK(rel_diff(tsls.alpha2(j), ols.alpha2(j)) < 1e-10);
}

TEST_CASE("just-identified 2SLS is the covariance ratio") {
    const Dataset data = random_dataset(500, 1, 8);
    const VectorXd zc = data.z().col(0).array() - data.z().col(0).mean();
    const VectorXd yc = data.y().array() - data.y().mean();
    const VectorXd dc = data.d().array() - data.d().mean();
    CHECK(rel_diff(fit_2sls(data).alpha1, zc.dot(yc) / zc.dot(dc)) < 1e-10);
}

TEST_CASE("2SLS HC variance uses the instrumented regressors") {
    const Dataset data = random_dataset(400, 2, 12, 1);
    const LinearFit fit = fit_2sls(data);
    const ProjectionResult first = ols_solve(data.instrument_design(), data.d());
    MatrixXd a(data.n(), 1 + data.p_x());
    a << first.fitted, data.x();
    const MatrixXd expect = hc0_by_rows(a, fit.residuals);
    CHECK((fit.hc_variance - expect).cwiseAbs().maxCoeff() < 1e-10 * expect.cwiseAbs().maxCoeff());
    CHECK(fit.first_stage_f > 10.0);
    CHECK_FALSE(fit.weak_instrument);
}

TEST_CASE("irrelevant instrument is flagged as weak") {
    const Dataset base = random_dataset(400, 1, 4);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> nd;
    MatrixXd z(400, 1);
    for (Eigen::Index i = 0; i < 400; ++i) z(i, 0) = nd(rng);
    const Dataset weak(base.y(), base.d(), base.x(), base.x_labels(), z, {"noise"});
    const LinearFit fit = fit_2sls(weak);
    CHECK(fit.weak_instrument);
    CHECK(fit.first_stage_f < 10.0);
}

TEST_CASE("instrument spanned by the controls is rejected") {
    const Dataset base = random_dataset(100, 1, 4);
    const Dataset bad(base.y(), base.d(), base.x(), base.x_labels(), MatrixXd::Constant(100, 1, 3.0), {"c3"});
    CHECK_THROWS_AS(fit_2sls(bad), RankDeficient);
}

TEST_CASE("2SLS converges when the structural scale is constant") {
    McConfig c;
    c.gamma1 = 1.0;
    for (Eigen::Index n : {1000, 10000, 100000}) {
        c.n = n;
        const LinearFit fit = fit_2sls(simulate_dgp(c, 0));
        CHECK(std::abs(fit.alpha1 - 1.0) < 4.0 * fit.se_alpha1());
    }
}

TEST_CASE("bias oracle is zero when g is constant or there is no endogeneity") {
    McConfig g1;
    g1.gamma1 = 1.0;
    const auto r = bias_oracle_2sls(g1, 1000000, 5);
    CHECK(std::abs(r.bias) < 3.0 * r.mc_standard_error);
    CHECK(r.bias == doctest::Approx(r.cross_moment / r.sigma_h).epsilon(1e-12));

    for (double gamma1 : {0.0, 1.0}) {
        McConfig c;
        c.lambda = 0.0;
        c.gamma1 = gamma1;
        c.delta1 = 1.0;
        c.delta2 = 0.2;
        const auto z = bias_oracle_2sls(c, 1000000, 6);
        CHECK(std::abs(z.bias) < 3.0 * z.mc_standard_error);
    }
}

TEST_CASE("bias oracle sigma_h is the folded-normal variance") {
    // Var|N(0,1)| = 1 - 2/pi, times pi1^2 = 4.
    McConfig c;
    c.pi1 = 2.0;
    const auto r = bias_oracle_2sls(c, 2000000, 1);
    CHECK(r.sigma_h == doctest::Approx(4.0 * (1.0 - 2.0 / std::numbers::pi)).epsilon(0.005));
    CHECK(r.mc_draws == 2000000);
}

TEST_CASE("bias oracle matches the large-sample 2SLS bias in the tables") {
    // Anchors carry their own Monte Carlo noise, hence the absolute tolerance.
    McConfig a;
    a.delta2 = 0.2;
    const auto ra = bias_oracle_2sls(a, 2000000, 11);
    McConfig b;
    b.gamma1 = 1.0;
    b.delta1 = 1.0;
    const auto rb = bias_oracle_2sls(b, 2000000, 11);
    CHECK(std::abs(rb.bias - 0.34) < 0.03);
    CHECK(std::abs(ra.bias - 0.387) < 0.03);
}

TEST_CASE("bias oracle does not depend on the worker count") {
    McConfig c;
    c.delta1 = 1.0;
    const auto one = bias_oracle_2sls(c, 300000, 4, 1);
    const auto four = bias_oracle_2sls(c, 300000, 4, 4);
    CHECK(one.bias == four.bias);
    CHECK(one.mc_standard_error == four.mc_standard_error);
}

TEST_CASE("bias oracle argument checks") {
    McConfig c;
    CHECK_THROWS_AS(bias_oracle_2sls(c, 1000, 1), InvalidArgument);
    c.pi1 = 0.0;
    CHECK_THROWS_AS(bias_oracle_2sls(c, 100000, 1), DegenerateInstrument);
}
