#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>

#include "spca/baselines.hpp"
#include "spca/csv.hpp"
#include "spca/dataset.hpp"
#include "spca/errors.hpp"
#include "spca/rng.hpp"

using namespace spca;

TEST_CASE("centering constant columns") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 2);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(4, 1);
    Y << 1, 2, 3, 4;
    const Dataset d = center(X, Y, Task::regression);
    CHECK(d.X.norm() == doctest::Approx(0.0));
    CHECK(d.x_mean(0) == doctest::Approx(1.0));
    CHECK(d.x_mean(1) == doctest::Approx(1.0));
}

TEST_CASE("two point symmetry") {
    Eigen::MatrixXd X(2, 1), Y(2, 1);
    X << 1, 3;
    Y << 0, 0;
    const Dataset d = center(X, Y, Task::regression);
    CHECK(d.X(0, 0) == doctest::Approx(-1.0));
    CHECK(d.X(1, 0) == doctest::Approx(1.0));
    CHECK(d.x_mean(0) == doctest::Approx(2.0));
}

TEST_CASE("one-hot encoding of labels") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(3, 2);
    Eigen::MatrixXd labels(3, 1);
    labels << 0, 1, 1;
    const Dataset d = center(X, labels, Task::classification);
    REQUIRE(d.Y.cols() == 2);
    CHECK(d.Y(0, 0) == 1.0);
    CHECK(d.Y(1, 1) == 1.0);
    CHECK(d.Y(2, 1) == 1.0);
    CHECK(d.Y.sum() == doctest::Approx(3.0));
}

TEST_CASE("centering idempotence") {
    Rng rng(7);
    const Eigen::MatrixXd X = rng.gaussian(15, 4);
    const Eigen::MatrixXd Y = rng.gaussian(15, 2);
    const Dataset once = center(X, Y, Task::regression);
    const Dataset twice = center(once.X, once.Y, Task::regression);
    CHECK((once.X - twice.X).norm() <= 1e-12);
    CHECK((once.Y - twice.Y).norm() <= 1e-12);
}

TEST_CASE("standardization flag") {
    Rng rng(17);
    Eigen::MatrixXd X = rng.gaussian(30, 3);
    X.col(1) *= 10.0;
    X.col(2).setConstant(4.0);  // constant column keeps scale one
    const Eigen::MatrixXd Y = rng.gaussian(30, 1);
    CenterOptions opts;
    opts.standardize = true;
    const Dataset d = center(X, Y, Task::regression, opts);
    for (int j = 0; j < 2; ++j)
        CHECK(d.X.col(j).squaredNorm() / 29.0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.x_scale(2) == 1.0);
    CHECK(d.X.col(2).norm() == doctest::Approx(0.0));
    // applying the stored centering reproduces the training matrix
    CHECK((apply_centering(d.centering(), X) - d.X).norm() <= 1e-12);
}

TEST_CASE("centering rejects bad input") {
    CHECK_THROWS_AS(center(Eigen::MatrixXd::Ones(1, 2), Eigen::MatrixXd::Ones(1, 1),
                           Task::regression),
                    DataError);
    CHECK_THROWS_AS(center(Eigen::MatrixXd::Ones(4, 2), Eigen::MatrixXd::Ones(3, 1),
                           Task::regression),
                    DataError);
}

TEST_CASE("variation explained basics") {
    Rng rng(3);
    Eigen::MatrixXd X = rng.gaussian(12, 3);
    X = X.rowwise() - X.colwise().mean();

    SUBCASE("full basis explains everything") {
        const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(3, 3);
        CHECK(variation_explained(X, L) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("data inside the subspace") {
        Eigen::MatrixXd X1 = Eigen::MatrixXd::Zero(10, 3);
        X1.col(0) = rng.gaussian(10, 1);
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(3, 1);
        L(0, 0) = 1;
        CHECK(variation_explained(X1, L) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("zero data rejected") {
        CHECK_THROWS(variation_explained(Eigen::MatrixXd::Zero(5, 3),
                                         Eigen::MatrixXd::Identity(3, 2)));
    }
}

TEST_CASE("variation explained matches singular value oracle") {
    Rng rng(11);
    Eigen::MatrixXd X = rng.gaussian(20, 5);
    X = X.rowwise() - X.colwise().mean();
    const Eigen::MatrixXd L = pca(X, 2);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const Eigen::VectorXd s = svd.singularValues();
    const double expected =
        (s(0) * s(0) + s(1) * s(1)) / s.array().square().sum();
    CHECK(variation_explained(X, L) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("variation explained rotation invariance and monotonicity") {
    Rng rng(13);
    Eigen::MatrixXd X = rng.gaussian(25, 6);
    X = X.rowwise() - X.colwise().mean();
    const Eigen::MatrixXd L = pca(X, 3);

    // right-rotation leaves the value unchanged
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(rng.gaussian(3, 3));
    const Eigen::MatrixXd Q = qr.householderQ();
    CHECK(variation_explained(X, L * Q) ==
          doctest::Approx(variation_explained(X, L)).epsilon(1e-10));

    // appending a basis column never decreases the value
    const Eigen::MatrixXd L4 = pca(X, 4);
    for (int r = 1; r < 4; ++r)
        CHECK(variation_explained(X, L4.leftCols(r + 1)) >=
              variation_explained(X, L4.leftCols(r)) - 1e-12);
}

TEST_CASE("split arithmetic and determinism") {
    SplitPlan plan;
    plan.seed = 42;
    plan.test_fraction = 0.2;
    plan.n_folds = 4;

    SUBCASE("n=10 gives a 2-row test set") {
        const Split s = make_split(10, plan);
        CHECK(s.test.size() == 2);
        CHECK(s.train.size() == 8);
        std::size_t total = 0;
        for (const auto& f : s.folds) total += f.size();
        CHECK(total == 8);
    }
    SUBCASE("same seed reproduces the split exactly") {
        const Split a = make_split(50, plan, 3);
        const Split b = make_split(50, plan, 3);
        CHECK(a.test == b.test);
        CHECK(a.train == b.train);
        CHECK(a.folds == b.folds);
        const Split c = make_split(50, plan, 4);
        CHECK(a.test != c.test);
    }
    SUBCASE("fold sizes differ by at most one") {
        const Split s = make_split(9, plan);
        REQUIRE(s.folds.size() == 4);
        std::vector<std::size_t> sizes;
        for (const auto& f : s.folds) sizes.push_back(f.size());
        std::sort(sizes.begin(), sizes.end());
        CHECK(sizes == std::vector<std::size_t>{1, 2, 2, 2});
    }
    SUBCASE("test and train are disjoint and cover everything") {
        const Split s = make_split(23, plan, 1);
        std::vector<int> all = s.train;
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::sort(all.begin(), all.end());
        for (int i = 0; i < 23; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
    }
    SUBCASE("too many folds rejected") {
        plan.n_folds = 9;
        CHECK_THROWS(make_split(10, plan));
    }
}

TEST_CASE("csv round trip with header and labels") {
    const std::string path = "test_dataset_tmp.csv";
    {
        std::ofstream out(path);
        out << "f1,f2,label\n";
        out << "1.0,2.0,yes\n";
        out << "3.0,4.0,no\n";
        out << "5.0,6().0,yes\n";
    }
    CHECK_THROWS_AS(load_csv(path, "label", Task::classification), DataError);
    {
        std::ofstream out(path);
        out << "f1,f2,label\n";
        out << "1.0,2.0,yes\n";
        out << "3.0,4.0,no\n";
        out << "5.0,6.0,yes\n";
    }
    const RawData d = load_csv(path, "label", Task::classification);
    CHECK(d.n_classes == 2);
    CHECK(d.class_names == std::vector<std::string>{"no", "yes"});
    CHECK(d.X.rows() == 3);
    CHECK(d.X.cols() == 2);
    CHECK(d.Y(0, 0) == 1.0);  // "yes" sorts after "no"
    CHECK(d.Y(1, 0) == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("csv missing value diagnostics") {
    const std::string path = "test_dataset_missing.csv";
    {
        std::ofstream out(path);
        out << "a,b,y\n1,2,3\n4,,6\n";
    }
    try {
        load_csv(path, "y", Task::regression);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 3") != std::string::npos);
        CHECK(msg.find("'b'") != std::string::npos);
    }
    std::remove(path.c_str());
}
