#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "spca/baselines.hpp"
#include "spca/errors.hpp"
#include "spca/harness.hpp"
#include "spca/solvers.hpp"
#include "test_support.hpp"

using namespace spca;
using namespace spca::test;

namespace {

FitConfig config_for(Method method, Mode mode, int r, double lambda,
                     Algorithm alg = Algorithm::alternating) {
    FitConfig cfg;
    cfg.method = method;
    cfg.algorithm = alg;
    cfg.mode = mode;
    cfg.r = r;
    cfg.lambda = lambda;
    return cfg;
}

void check_monotone(const std::vector<double>& trace) {
    for (std::size_t i = 1; i < trace.size(); ++i)
        CHECK(trace[i] <= trace[i - 1] + 1e-10 * std::max(1.0, std::abs(trace[i - 1])));
}

} // namespace

TEST_CASE("large lambda recovers the pca subspace") {
    Rng rng(51);
    const Dataset d = random_regression(rng, 40, 8, 1);
    const Eigen::MatrixXd pca_basis = pca(d.X, 2);
    for (Algorithm alg : {Algorithm::alternating, Algorithm::substitution}) {
        const FitResult res = fit(d, config_for(Method::lspca, Mode::cv, 2, 1e9, alg));
        CHECK(chordal_distance(res.params.L, pca_basis) <= 1e-3);
        check_monotone(res.nll_trace);
    }
}

TEST_CASE("small lambda recovers the rrr subspace") {
    Rng rng(52);
    const Dataset d = random_regression(rng, 60, 6, 2);
    const RrrResult rr = rrr(d.X, d.Y, 2);
    for (Algorithm alg : {Algorithm::alternating, Algorithm::substitution}) {
        FitConfig cfg = config_for(Method::lspca, Mode::cv, 2, 1e-9, alg);
        cfg.mcgd.grad_tol = 1e-10;
        const FitResult res = fit(d, cfg);
        CHECK(chordal_distance(res.params.L, rr.L) <= 1e-2);
        check_monotone(res.nll_trace);
    }
}

TEST_CASE("r = p reproduces the full model") {
    Rng rng(53);
    SUBCASE("regression equals ols") {
        const Dataset d = random_regression(rng, 40, 5, 2);
        const FitResult res = fit(d, config_for(Method::lspca, Mode::cv, 5, 1.0));
        const Eigen::MatrixXd fitted = d.X * res.params.L * res.params.beta;
        const Eigen::MatrixXd ols = d.X * pinv_solve(d.X, d.Y);
        CHECK((fitted - ols).norm() <= 1e-6);
    }
    SUBCASE("classification equals full logistic regression") {
        const Dataset d = random_classification(rng, 50, 4, 2);
        FitConfig cfg = config_for(Method::lrpca, Mode::cv, 4, 1.0);
        cfg.lr_reg = 1e-6;
        const FitResult res = fit(d, cfg);
        const Eigen::MatrixXd scores = d.X * res.params.L * res.params.beta;
        const Eigen::MatrixXd P = softmax_rows(scores);

        const Eigen::MatrixXd beta_full =
            solve_beta_lr(d.X, d.Y, Eigen::MatrixXd::Identity(4, 4), 1e-6);
        const Eigen::MatrixXd P_full = softmax_rows(d.X * beta_full);
        CHECK((P - P_full).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("substitution agrees with alternating") {
    Rng rng(54);
    const Dataset d = random_regression(rng, 40, 6, 2);
    const FitResult alt = fit(d, config_for(Method::lspca, Mode::cv, 2, 2.0));
    const FitResult sub =
        fit(d, config_for(Method::lspca, Mode::cv, 2, 2.0, Algorithm::substitution));
    CHECK(std::abs(alt.nll_trace.back() - sub.nll_trace.back()) <=
          1e-6 * std::max(1.0, std::abs(alt.nll_trace.back())));
}

TEST_CASE("substitution with zero response reduces to pca") {
    Rng rng(55);
    Dataset d = random_regression(rng, 30, 6, 2);
    d.Y.setZero();
    const FitResult res =
        fit(d, config_for(Method::lspca, Mode::cv, 2, 1.0, Algorithm::substitution));
    CHECK(chordal_distance(res.params.L, pca(d.X, 2)) <= 1e-6);
}

TEST_CASE("substitution rejects lrpca") {
    Rng rng(56);
    const Dataset d = random_classification(rng, 20, 4, 2);
    CHECK_THROWS_AS(
        fit(d, config_for(Method::lrpca, Mode::cv, 2, 1.0, Algorithm::substitution)),
        std::invalid_argument);
}

TEST_CASE("mle mode keeps the reparameterization consistent") {
    Rng rng(57);
    const Dataset d = random_regression(rng, 50, 6, 1);
    for (Algorithm alg : {Algorithm::alternating, Algorithm::substitution}) {
        const FitResult res = fit(d, config_for(Method::lspca, Mode::mle, 2, 1.0, alg));
        REQUIRE(res.params.sigma_x2.has_value());
        REQUIRE(res.params.alpha.has_value());
        REQUIRE(res.params.sigma_y2.has_value());
        const double sx2 = *res.params.sigma_x2;
        const double a = *res.params.alpha;
        CHECK(res.params.gamma ==
              doctest::Approx(1.0 - std::sqrt(sx2 / (sx2 + a))).epsilon(1e-12));
        CHECK(res.params.lambda ==
              doctest::Approx(*res.params.sigma_y2 / sx2).epsilon(1e-12));
        check_monotone(res.nll_trace);
        CHECK(res.converged);
    }
}

TEST_CASE("mle mode for classification") {
    Rng rng(58);
    const Dataset d = random_classification(rng, 60, 5, 2);
    FitConfig cfg = config_for(Method::lrpca, Mode::mle, 2, 1.0);
    cfg.lr_reg = 1e-8;
    const FitResult res = fit(d, cfg);
    REQUIRE(res.params.sigma_x2.has_value());
    CHECK(res.params.lambda ==
          doctest::Approx(1.0 / (2.0 * *res.params.sigma_x2)).epsilon(1e-12));
    CHECK(!res.params.sigma_y2.has_value());
    check_monotone(res.nll_trace);
}

TEST_CASE("mle mode rejects r = p") {
    Rng rng(59);
    const Dataset d = random_regression(rng, 30, 4, 1);
    CHECK_THROWS_AS(fit(d, config_for(Method::lspca, Mode::mle, 4, 1.0)),
                    std::invalid_argument);
}

TEST_CASE("fits are deterministic") {
    Rng rng(60);
    const Dataset d = random_regression(rng, 35, 6, 2);
    const FitConfig cfg = config_for(Method::lspca, Mode::mle, 2, 1.0);
    const FitResult a = fit(d, cfg);
    const FitResult b = fit(d, cfg);
    CHECK((a.params.L - b.params.L).norm() == 0.0);
    CHECK((a.params.beta - b.params.beta).norm() == 0.0);
    CHECK(a.nll_trace == b.nll_trace);
    CHECK((a.Z - b.Z).norm() == 0.0);
}

TEST_CASE("pca initialization beats random starts") {
    Rng rng(61);
    int wins = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        const Dataset d = random_regression(rng, 25, 6, 1);
        const Eigen::MatrixXd L0 = pca(d.X, 2);
        const double lambda = 1.0;
        auto value_at = [&](const Eigen::MatrixXd& L) {
            ModelParams mp;
            mp.L = L;
            mp.beta = solve_beta_ls(d.X, d.Y, L);
            mp.lambda = lambda;
            mp.gamma = 1.0;
            return nll(mp, Method::lspca, d, NllMode::cv);
        };
        const double at_pca = value_at(L0);
        bool all_worse = true;
        for (int i = 0; i < 10; ++i)
            if (value_at(random_subspace(rng, 6, 2).L) < at_pca) all_worse = false;
        if (all_worse) ++wins;
    }
    CHECK(wins > trials / 2);
}

TEST_CASE("embedding equals X L") {
    Rng rng(62);
    const Dataset d = random_regression(rng, 30, 5, 1);
    const FitResult res = fit(d, config_for(Method::lspca, Mode::cv, 2, 1.0));
    CHECK((res.Z - d.X * res.params.L).norm() <= 1e-12);
    CHECK(res.variation_explained ==
          doctest::Approx(variation_explained(d.X, res.params.L)).epsilon(1e-12));
}

TEST_CASE("larger lambda shrinks the fit toward the pca subspace") {
    Rng rng(64);
    const Dataset d = random_regression(rng, 50, 6, 2);
    const Eigen::MatrixXd pca_basis = pca(d.X, 2);
    const std::vector<double> lambdas = default_lambda_grid(d, 10);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : lambdas) {  // grid is ascending
        const FitResult res = fit(d, config_for(Method::lspca, Mode::cv, 2, lambda));
        const double dist = chordal_distance(res.params.L, pca_basis);
        CHECK(dist <= prev + 1e-4);
        prev = dist;
    }
}

TEST_CASE("large-lambda fit predicts like the pc baseline") {
    Rng rng(65);
    const Dataset d = random_regression(rng, 40, 6, 1);
    const FitResult spca_fit = fit(d, config_for(Method::lspca, Mode::cv, 2, 1e9));
    const FitResult base = fit_pc_baseline(d, 2);
    const Eigen::MatrixXd a = d.X * spca_fit.params.L * spca_fit.params.beta;
    const Eigen::MatrixXd b = d.X * base.params.L * base.params.beta;
    CHECK((a - b).squaredNorm() / a.rows() <= 1e-3);
}

TEST_CASE("substitution tends to run faster than alternating") {
    // soft benchmark only: report, never fail
    Rng rng(66);
    const Dataset d = random_regression(rng, 200, 50, 1);
    FitConfig cfg = config_for(Method::lspca, Mode::cv, 5, 1.0);
    const FitResult alt = fit_alternating(d, cfg);
    cfg.algorithm = Algorithm::substitution;
    const FitResult sub = fit_substitution(d, cfg);
    MESSAGE("alternating ", alt.wall_time_sec, "s vs substitution ", sub.wall_time_sec, "s");
    CHECK(sub.converged);
    CHECK(alt.converged);
}

TEST_CASE("scaled-down synthetic model recovery") {
    Rng rng(63);
    const int n = 200, p = 10, r = 2, q = 1;
    const GrassmannPoint truth = random_subspace(rng, p, r);
    const Eigen::MatrixXd beta_true = rng.gaussian(r, q);
    const double sx = 1.0, alpha = 25.0, sy = 0.1;

    Eigen::MatrixXd X(n, p), Y(n, q);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd g = rng.gaussian(p, 1);
        const Eigen::VectorXd u = rng.gaussian(r, 1);
        X.row(i) = (sx * g + std::sqrt(alpha) * truth.L * u).transpose();
        Y.row(i) =
            (beta_true.transpose() * (truth.L.transpose() * X.row(i).transpose()) +
             sy * rng.gaussian(q, 1))
                .transpose();
    }
    const Dataset d = center(X, Y, Task::regression);
    const FitResult res = fit(d, config_for(Method::lspca, Mode::mle, r, 1.0));
    CHECK(chordal_distance(res.params.L, truth.L) <= 0.1);
    CHECK(*res.params.alpha == doctest::Approx(alpha).epsilon(0.5));
}
