#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace spca {

enum class Task { regression, classification };

/// Centering statistics needed to map new raw rows into model coordinates.
struct Centering {
    Eigen::VectorXd x_mean;   // length p
    Eigen::VectorXd x_scale;  // length p, all ones unless standardized
    Eigen::VectorXd y_mean;   // length q for regression, empty otherwise
};

/// A centered, model-ready view of the data. X columns have zero mean;
/// Y is column-centered for regression and one-hot rows for classification.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::MatrixXd Y;
    Task task = Task::regression;
    Eigen::VectorXd x_mean;
    Eigen::VectorXd x_scale;
    Eigen::VectorXd y_mean;  // regression only
    std::vector<std::string> feature_names;
    std::vector<std::string> response_names;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
    Eigen::Index q() const { return Y.cols(); }

    Centering centering() const { return {x_mean, x_scale, y_mean}; }
};

struct CenterOptions {
    bool standardize = false;  // divide columns by sample standard deviation
    // classification: total class count; 0 infers it from the labels present
    int n_classes = 0;
};

/// Centers raw data into a Dataset. For classification raw_Y must be a single
/// column of class labels (values are mapped to indices by sorted order) or an
/// n x q one-hot matrix.
Dataset center(const Eigen::MatrixXd& raw_X, const Eigen::MatrixXd& raw_Y, Task task,
               const CenterOptions& opts = {});

/// Applies training centering (and scaling) to new raw rows.
Eigen::MatrixXd apply_centering(const Centering& c, const Eigen::MatrixXd& raw_rows);

/// Fraction of the Frobenius mass of X captured by the subspace spanned by L:
/// ||XL||_F^2 / ||X||_F^2. L must have orthonormal columns and X must be nonzero.
double variation_explained(const Eigen::MatrixXd& X, const Eigen::MatrixXd& L);

struct SplitPlan {
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
    int n_folds = 10;
    int n_repeats = 10;
};

/// Row-index partition of [0, n): a held-out test set plus CV folds over the
/// remaining training indices. Fold sizes differ by at most one.
struct Split {
    std::vector<int> train;               // all non-test indices, in fold order
    std::vector<int> test;
    std::vector<std::vector<int>> folds;  // partition of train
};

/// Deterministic under (plan.seed, repeat): the same inputs always produce the
/// same index sets.
Split make_split(int n, const SplitPlan& plan, int repeat = 0);

/// Copies the selected rows of a dataset-sized matrix.
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows);

} // namespace spca
