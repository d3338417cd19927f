#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "spca/harness.hpp"
#include "test_support.hpp"

using namespace spca;
using namespace spca::test;

namespace {

// noiseless low-rank regression data: Y = X L beta exactly
RawData synthetic_linear(Rng& rng, int n, int p, int true_rank) {
    RawData raw;
    raw.task = Task::regression;
    raw.X = rng.gaussian(n, p);
    const GrassmannPoint L = random_subspace(rng, p, true_rank);
    const Eigen::MatrixXd beta = rng.gaussian(true_rank, 1);
    raw.Y = raw.X * L.L * beta;
    raw.n_classes = 0;
    return raw;
}

} // namespace

TEST_CASE("metrics") {
    SUBCASE("exact predictions score zero") {
        Eigen::MatrixXd y(3, 2);
        y << 1, 2, 3, 4, 5, 6;
        CHECK(metrics(y, y, Task::regression) == doctest::Approx(0.0));
    }
    SUBCASE("constant offset of three gives mse nine") {
        Eigen::MatrixXd y = Eigen::MatrixXd::Zero(4, 2);
        Eigen::MatrixXd yhat = Eigen::MatrixXd::Constant(4, 2, 3.0);
        CHECK(metrics(yhat, y, Task::regression) == doctest::Approx(9.0));
    }
    SUBCASE("all labels flipped gives error rate one") {
        Eigen::MatrixXd y(4, 1), yhat(4, 1);
        y << 0, 1, 0, 1;
        yhat << 1, 0, 1, 0;
        CHECK(metrics(yhat, y, Task::classification) == doctest::Approx(1.0));
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS(metrics(Eigen::MatrixXd(0, 1), Eigen::MatrixXd(0, 1), Task::regression));
    }
}

TEST_CASE("pcr on noiseless low-rank data is near exact") {
    Rng rng(81);
    const RawData raw = synthetic_linear(rng, 60, 6, 2);
    ExperimentPlan plan;
    plan.methods = {HarnessMethod::pcr};
    plan.r = 6;  // full rank certainly covers the signal
    plan.split.seed = 5;
    plan.split.n_repeats = 2;
    plan.split.n_folds = 4;
    const ExperimentResult res = run_experiment(raw, plan);
    REQUIRE(res.records.size() == 2);
    for (const auto& r : res.records) {
        CHECK(!r.failed);
        CHECK(r.test_error <= 1e-6);
    }
}

TEST_CASE("degenerate lambda grid is selected verbatim") {
    Rng rng(82);
    const RawData raw = synthetic_linear(rng, 50, 5, 2);
    ExperimentPlan plan;
    plan.methods = {HarnessMethod::lspca};
    plan.r = 2;
    plan.lambda_grid = {0.37};
    plan.split.seed = 9;
    plan.split.n_repeats = 1;
    plan.split.n_folds = 4;
    const ExperimentResult res = run_experiment(raw, plan);
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].lambda == doctest::Approx(0.37));
    CHECK(res.records[0].cv_cells == 1);
}

TEST_CASE("experiments are deterministic") {
    Rng rng(83);
    RawData raw = synthetic_linear(rng, 40, 5, 2);
    raw.Y += 0.05 * rng.gaussian(40, 1);
    ExperimentPlan plan;
    plan.methods = {HarnessMethod::lspca, HarnessMethod::pcr};
    plan.r = 2;
    plan.lambda_grid = {0.1, 1.0, 10.0};
    plan.split.seed = 77;
    plan.split.n_repeats = 2;
    plan.split.n_folds = 3;
    const ExperimentResult a = run_experiment(raw, plan);
    const ExperimentResult b = run_experiment(raw, plan);
    REQUIRE(a.records.size() == b.records.size());
    auto same_double = [](double x, double y) {
        return (std::isnan(x) && std::isnan(y)) || x == y;
    };
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].method == b.records[i].method);
        CHECK(same_double(a.records[i].lambda, b.records[i].lambda));
        CHECK(a.records[i].test_error == b.records[i].test_error);
        CHECK(a.records[i].train_error == b.records[i].train_error);
        CHECK(a.records[i].variation_explained == b.records[i].variation_explained);
        CHECK(a.records[i].seed == b.records[i].seed);
    }
}

TEST_CASE("cv selection is no worse than the worst grid point") {
    Rng rng(84);
    RawData raw = synthetic_linear(rng, 60, 6, 2);
    raw.Y += 0.1 * rng.gaussian(60, 1);
    ExperimentPlan plan;
    plan.methods = {HarnessMethod::lspca};
    plan.r = 2;
    plan.lambda_grid = {1e-3, 1.0, 1e3};
    plan.split.seed = 21;
    plan.split.n_repeats = 2;
    plan.split.n_folds = 4;
    const ExperimentResult res = run_experiment(raw, plan);

    for (int repeat = 0; repeat < 2; ++repeat) {
        const Split sp = make_split(60, plan.split, repeat);
        const Dataset train = center(take_rows(raw.X, sp.train), take_rows(raw.Y, sp.train),
                                     Task::regression);
        double worst = 0;
        for (double lambda : plan.lambda_grid) {
            FitSpec spec;
            spec.method = HarnessMethod::lspca;
            spec.r = 2;
            spec.lambda = lambda;
            const FittedModel fm = fit_model(train, spec);
            worst = std::max(worst,
                             prediction_error(fm.predict(take_rows(raw.X, sp.test)),
                                              take_rows(raw.Y, sp.test), Task::regression));
        }
        CHECK(res.records[static_cast<std::size_t>(repeat)].test_error <= worst + 1e-12);
    }
}

TEST_CASE("classification experiment end to end") {
    Rng rng(85);
    const int n = 80;
    RawData raw;
    raw.task = Task::classification;
    raw.X = rng.gaussian(n, 4);
    raw.Y.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        const int c = static_cast<int>(rng.uniform_index(2));
        raw.Y(i, 0) = c;
        raw.X(i, 0) += 2.5 * c;
    }
    raw.n_classes = 2;
    raw.class_names = {"a", "b"};

    ExperimentPlan plan;
    plan.methods = {HarnessMethod::lrpca, HarnessMethod::pcc};
    plan.r = 2;
    plan.lambda_grid = {0.01, 1.0};
    plan.split.seed = 4;
    plan.split.n_repeats = 1;
    plan.split.n_folds = 4;
    plan.lr_reg = 1e-6;
    const ExperimentResult res = run_experiment(raw, plan);
    REQUIRE(res.records.size() == 2);
    for (const auto& r : res.records) {
        CHECK(!r.failed);
        CHECK(r.test_error >= 0.0);
        CHECK(r.test_error <= 1.0);
        CHECK(r.variation_explained >= 0.0);
        CHECK(r.variation_explained <= 1.0);
    }
    CHECK(res.summary.size() == 2);
    CHECK(res.summary[0].n_ok == 1);
}

TEST_CASE("pareto sweep shape and endpoints") {
    Rng rng(86);
    RawData raw = synthetic_linear(rng, 80, 6, 3);
    raw.Y += 0.05 * rng.gaussian(80, 1);

    ExperimentPlan plan;
    plan.split.seed = 13;
    plan.split.n_folds = 4;

    std::vector<double> grid;
    const Dataset probe = center(raw.X, raw.Y, Task::regression);
    for (double g : default_lambda_grid(probe, 12)) grid.push_back(g);

    const ParetoCurve curve = pareto_sweep(raw, HarnessMethod::lspca, 2, grid, plan);
    REQUIRE(curve.points.size() == grid.size());

    // reference block contains the pcr endpoint and the rrr endpoint
    REQUIRE(curve.references.size() == 2);
    CHECK(curve.references[0].name == "pcr");
    CHECK(curve.references[1].name == "rrr");

    const double pcr_ve = curve.references[0].ve_train;
    const double pcr_train_err = curve.references[0].err_train;

    // largest lambda approaches the pca subspace, hence the pcr variation
    CHECK(std::abs(curve.points.back().ve_train - pcr_ve) <= 1e-3);
    // smallest lambda can only improve the training loss at fixed r
    CHECK(curve.points.front().err_train <= pcr_train_err + 1e-9);
    // variation explained decays as lambda shrinks (allowing optimizer noise)
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        CHECK(curve.points[i - 1].ve_train <= curve.points[i].ve_train + 1e-4);
}

TEST_CASE("failed grid cells are counted, not dropped") {
    Rng rng(88);
    RawData raw = synthetic_linear(rng, 40, 5, 2);
    raw.Y += 0.1 * rng.gaussian(40, 1);
    ExperimentPlan plan;
    plan.methods = {HarnessMethod::lspca};
    plan.mode = Mode::mle;
    plan.r_grid = {2, 5};  // r = p is invalid in mle mode, so those cells fail
    plan.split.seed = 3;
    plan.split.n_repeats = 1;
    plan.split.n_folds = 3;
    const ExperimentResult res = run_experiment(raw, plan);
    REQUIRE(res.records.size() == 1);
    CHECK(!res.records[0].failed);
    CHECK(res.records[0].r == 2);
    CHECK(res.records[0].cv_failures == 3);  // one per fold of the bad cell
}

TEST_CASE("a fully failing method is reported as failed") {
    Rng rng(89);
    RawData raw = synthetic_linear(rng, 40, 5, 2);
    ExperimentPlan plan;
    plan.methods = {HarnessMethod::lspca};
    plan.mode = Mode::mle;
    plan.r = 5;  // invalid everywhere in mle mode
    plan.split.seed = 3;
    plan.split.n_repeats = 1;
    plan.split.n_folds = 3;
    const ExperimentResult res = run_experiment(raw, plan);
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].failed);
    CHECK(!res.records[0].error.empty());
    CHECK(res.summary[0].n_failed == 1);
    CHECK(res.summary[0].n_ok == 0);
}

TEST_CASE("mle experiment records the estimated lambda") {
    Rng rng(87);
    RawData raw = synthetic_linear(rng, 50, 6, 2);
    raw.Y += 0.1 * rng.gaussian(50, 1);
    ExperimentPlan plan;
    plan.methods = {HarnessMethod::lspca};
    plan.mode = Mode::mle;
    plan.r = 2;
    plan.split.seed = 31;
    plan.split.n_repeats = 1;
    plan.split.n_folds = 4;
    const ExperimentResult res = run_experiment(raw, plan);
    REQUIRE(res.records.size() == 1);
    CHECK(!res.records[0].failed);
    CHECK(res.records[0].cv_cells == 1);  // nothing to cross-validate
    CHECK(res.records[0].lambda > 0);     // estimated, not gridded
}
