#include "cfhet/errors.hpp"
#include "cfhet/linalg.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numeric>
#include <random>

using namespace cfhet;
using cfhet::testing::rel_diff;

namespace {

MatrixXd random_matrix(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    MatrixXd m(n, k);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < k; ++j) m(i, j) = nd(rng);
    return m;
}

}  // namespace

TEST_CASE("projection on a constant gives the mean") {
    const DesignMatrix design(MatrixXd::Ones(3, 1), {"const"});
    const VectorXd y = (VectorXd(3) << 1, 2, 4).finished();
    const auto r = ols_solve(design, y);
    CHECK(r.coefficients(0) == doctest::Approx(7.0 / 3.0).epsilon(1e-14));
    CHECK(r.residuals(0) == doctest::Approx(-4.0 / 3.0).epsilon(1e-14));
    CHECK(r.residuals(1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
    CHECK(r.residuals(2) == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
    CHECK(r.rank == 1);
}

TEST_CASE("target in column span leaves zero residuals") {
    const MatrixXd a = random_matrix(20, 3, 5);
    const VectorXd beta = (VectorXd(3) << 1.5, -2.0, 0.25).finished();
    const auto r = ols_solve(a, VectorXd(a * beta));
    CHECK(r.residuals.cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r.coefficients - beta).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-column fit matches hand-solved normal equations") {
    // X'X = [[3,3],[3,5]], X'y = [7,10]  =>  b = (5/6, 3/2).
    MatrixXd x(3, 2);
    x << 1, 0, 1, 1, 1, 2;
    const VectorXd y = (VectorXd(3) << 1, 2, 4).finished();
    const auto r = ols_solve(DesignMatrix(x, {"const", "z"}), y);
    CHECK(r.coefficients(0) == doctest::Approx(5.0 / 6.0).epsilon(1e-13));
    CHECK(r.coefficients(1) == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(r.residuals(0) == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
    CHECK(r.residuals(1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
    CHECK(r.residuals(2) == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("residuals are orthogonal to the design and sum back to the target") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const MatrixXd a = random_matrix(50, 4, seed);
        const VectorXd y = random_matrix(50, 1, seed + 100).col(0);
        const auto r = ols_solve(a, y);
        CHECK(((r.fitted + r.residuals) - y).cwiseAbs().maxCoeff() < 1e-12);
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const double ratio = std::abs(a.col(j).dot(r.residuals)) / (a.col(j).norm() * r.residuals.norm() + 1e-300);
            CHECK(ratio < 1e-8);
        }
    }
}

TEST_CASE("row permutation leaves coefficients unchanged") {
    const MatrixXd a = random_matrix(40, 3, 9);
    const VectorXd y = random_matrix(40, 1, 10).col(0);
    std::vector<int> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
    MatrixXd ap(40, 3);
    VectorXd yp(40);
    for (int i = 0; i < 40; ++i) {
        ap.row(i) = a.row(perm[static_cast<std::size_t>(i)]);
        yp(i) = y(perm[static_cast<std::size_t>(i)]);
    }
    const VectorXd b1 = ols_solve(a, y).coefficients;
    const VectorXd b2 = ols_solve(ap, yp).coefficients;
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(rel_diff(b1(j), b2(j)) < 1e-12);
}

TEST_CASE("collinear design raises RankDeficient") {
    MatrixXd a = random_matrix(30, 3, 2);
    a.col(2) = 2.0 * a.col(0) - a.col(1);
    CHECK_THROWS_AS(ols_solve(a, VectorXd::Ones(30)), RankDeficient);
    try {
        ols_solve(a, VectorXd::Ones(30));
    } catch (const RankDeficient& e) {
        CHECK(e.rank() == 2);
        CHECK(e.columns() == 3);
    }
}

TEST_CASE("design matrix invariants") {
    CHECK_THROWS_AS(DesignMatrix(MatrixXd::Ones(2, 3), {"a", "b", "c"}), InvalidArgument);
    CHECK_THROWS_AS(DesignMatrix(MatrixXd::Ones(3, 2), {"a", "a"}), InvalidArgument);
    CHECK_THROWS_AS(DesignMatrix(MatrixXd::Ones(3, 2), {"a"}), InvalidArgument);
    MatrixXd bad = MatrixXd::Ones(3, 1);
    bad(1, 0) = std::nan("");
    CHECK_THROWS_AS(DesignMatrix(bad, {"a"}), NonFiniteInput);
    VectorXd y = VectorXd::Ones(3);
    y(0) = INFINITY;
    CHECK_THROWS_AS(ols_solve(MatrixXd::Ones(3, 1), y), NonFiniteInput);
}

TEST_CASE("condition number is reported and flagged above 1e8") {
    MatrixXd a(4, 2);
    a << 1, 1, 1, 1 + 1e-9, 1, 1 - 1e-9, 1, 1;
    const auto r = ols_solve(a, (VectorXd(4) << 1, 2, 3, 4).finished());
    CHECK(r.condition_number > 1e8);
    CHECK(r.ill_conditioned());
    const auto ok = ols_solve(MatrixXd::Identity(3, 3), VectorXd::Ones(3));
    CHECK(ok.condition_number == doctest::Approx(1.0));
    CHECK_FALSE(ok.ill_conditioned());
}

TEST_CASE("residualize on a constant demeans and on itself returns zero") {
    const DesignMatrix c(MatrixXd::Ones(5, 1), {"const"});
    const MatrixXd block = random_matrix(5, 2, 4);
    const MatrixXd r = residualize(block, c);
    for (Eigen::Index j = 0; j < 2; ++j) {
        const VectorXd expect = block.col(j).array() - block.col(j).mean();
        CHECK((r.col(j) - expect).cwiseAbs().maxCoeff() < 1e-14);
    }
    MatrixXd cv(6, 2);
    cv.col(0).setOnes();
    cv.col(1) = random_matrix(6, 1, 8).col(0);
    const DesignMatrix controls(cv, {"const", "x"});
    CHECK(residualize(cv, controls).cwiseAbs().maxCoeff() < 1e-13);
    CHECK_THROWS_AS(residualize(block, DesignMatrix(random_matrix(5, 1, 1), {"x"})), InvalidArgument);
}

TEST_CASE("residualized block is orthogonal to every control") {
    MatrixXd cv(200, 3);
    cv.col(0).setOnes();
    cv.rightCols(2) = random_matrix(200, 2, 21);
    const DesignMatrix controls(cv, {"const", "x1", "x2"});
    const MatrixXd r = residualize(random_matrix(200, 3, 22), controls);
    for (Eigen::Index j = 0; j < r.cols(); ++j)
        for (Eigen::Index k = 0; k < cv.cols(); ++k)
            CHECK(std::abs(r.col(j).dot(cv.col(k))) < 1e-8 * r.col(j).norm() * cv.col(k).norm());
}

TEST_CASE("Frisch-Waugh-Lovell: partialled-out slope equals full-regression coefficient") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Eigen::Index n = 300;
        MatrixXd x(n, 3);
        x.col(0).setOnes();
        x.rightCols(2) = random_matrix(n, 2, seed);
        const VectorXd d = x.rightCols(2).rowwise().sum() + random_matrix(n, 1, seed + 50).col(0);
        const VectorXd y = 2.0 * d + x * Eigen::Vector3d(1, -1, 0.5) + random_matrix(n, 1, seed + 99).col(0);
        MatrixXd full(n, 4);
        full << d, x;
        const double beta_full = ols_solve(full, y).coefficients(0);
        const DesignMatrix controls(x, {"const", "x1", "x2"});
        const VectorXd d_bar = residualize(d, controls);
        const VectorXd y_bar = residualize(y, controls);
        const double beta_fwl = d_bar.dot(y_bar) / d_bar.squaredNorm();
        CHECK(rel_diff(beta_full, beta_fwl) < 1e-9);
    }
}

TEST_CASE("invert_symmetric rejects singular matrices") {
    CHECK(invert_symmetric(MatrixXd(0, 0))->size() == 0);
    MatrixXd s(2, 2);
    s << 1, 1, 1, 1;
    CHECK_FALSE(invert_symmetric(s).has_value());
    MatrixXd p(2, 2);
    p << 2, 1, 1, 2;
    CHECK(((*invert_symmetric(p)) * p - MatrixXd::Identity(2, 2)).norm() < 1e-14);
}
