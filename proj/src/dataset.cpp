#include "spca/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "spca/errors.hpp"
#include "spca/rng.hpp"

namespace spca {

namespace {

bool looks_one_hot(const Eigen::MatrixXd& Y) {
    if (Y.cols() < 2) return false;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        int ones = 0;
        for (Eigen::Index j = 0; j < Y.cols(); ++j) {
            const double v = Y(i, j);
            if (v == 1.0)
                ++ones;
            else if (v != 0.0)
                return false;
        }
        if (ones != 1) return false;
    }
    return true;
}

Eigen::MatrixXd one_hot_from_labels(const Eigen::MatrixXd& raw_Y, int n_classes) {
    const Eigen::Index n = raw_Y.rows();
    std::set<double> distinct;
    for (Eigen::Index i = 0; i < n; ++i) distinct.insert(raw_Y(i, 0));
    std::map<double, int> index;
    int next = 0;
    for (double v : distinct) index[v] = next++;
    int q = static_cast<int>(distinct.size());
    if (n_classes > 0) {
        if (n_classes < q)
            throw DataError("more distinct labels than declared classes");
        // labels must already be integral indices when a class count is given,
        // otherwise absent classes would shift the mapping
        for (double v : distinct) {
            if (v < 0 || v >= n_classes || v != std::floor(v))
                throw DataError("label outside [0, n_classes) with explicit class count");
            index[v] = static_cast<int>(v);
        }
        q = n_classes;
    }
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, q);
    for (Eigen::Index i = 0; i < n; ++i) Y(i, index.at(raw_Y(i, 0))) = 1.0;
    return Y;
}

} // namespace

Dataset center(const Eigen::MatrixXd& raw_X, const Eigen::MatrixXd& raw_Y, Task task,
               const CenterOptions& opts) {
    const Eigen::Index n = raw_X.rows();
    if (n < 2) throw DataError("need at least two rows to center");
    if (raw_Y.rows() != n) throw DataError("row count mismatch between X and Y");
    if (raw_X.cols() < 1 || raw_Y.cols() < 1) throw DataError("empty matrix");

    Dataset d;
    d.task = task;
    d.x_mean = raw_X.colwise().mean();
    d.X = raw_X.rowwise() - d.x_mean.transpose();
    d.x_scale = Eigen::VectorXd::Ones(raw_X.cols());
    if (opts.standardize) {
        for (Eigen::Index j = 0; j < d.X.cols(); ++j) {
            const double sd = std::sqrt(d.X.col(j).squaredNorm() / static_cast<double>(n - 1));
            if (sd > 0) {
                d.x_scale(j) = sd;
                d.X.col(j) /= sd;
            }
        }
    }

    if (task == Task::regression) {
        d.y_mean = raw_Y.colwise().mean();
        d.Y = raw_Y.rowwise() - d.y_mean.transpose();
    } else {
        if (raw_Y.cols() == 1) {
            d.Y = one_hot_from_labels(raw_Y, opts.n_classes);
        } else if (looks_one_hot(raw_Y)) {
            d.Y = raw_Y;
        } else {
            throw DataError("classification response must be a label column or one-hot rows");
        }
    }
    return d;
}

Eigen::MatrixXd apply_centering(const Centering& c, const Eigen::MatrixXd& raw_rows) {
    if (raw_rows.cols() != c.x_mean.size())
        throw DataError("feature count mismatch when centering new rows");
    Eigen::MatrixXd out = raw_rows.rowwise() - c.x_mean.transpose();
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        if (c.x_scale(j) != 1.0) out.col(j) /= c.x_scale(j);
    return out;
}

double variation_explained(const Eigen::MatrixXd& X, const Eigen::MatrixXd& L) {
    if (L.rows() != X.cols()) throw std::invalid_argument("L row count must match X column count");
    if (L.cols() > L.rows()) throw std::invalid_argument("L has more columns than rows");
    const double ortho = (L.transpose() * L - Eigen::MatrixXd::Identity(L.cols(), L.cols())).norm();
    if (ortho > 1e-6) throw std::invalid_argument("L does not have orthonormal columns");
    const double total = X.squaredNorm();
    if (total <= 0) throw std::invalid_argument("variation explained undefined for zero data");
    return (X * L).squaredNorm() / total;
}

Split make_split(int n, const SplitPlan& plan, int repeat) {
    if (plan.test_fraction <= 0.0 || plan.test_fraction >= 1.0)
        throw std::invalid_argument("test_fraction must lie in (0,1)");
    if (plan.n_folds < 1) throw std::invalid_argument("n_folds must be positive");

    const int n_test = std::max(1, static_cast<int>(std::floor(
                               static_cast<double>(n) * plan.test_fraction + 0.5)));
    const int n_train = n - n_test;
    if (n_train < plan.n_folds)
        throw std::invalid_argument("fold count exceeds training size");

    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    Rng rng(derive_seed(plan.seed, {0x73706c6974ULL, static_cast<std::uint64_t>(repeat)}));
    rng.shuffle(idx);

    Split s;
    s.test.assign(idx.begin(), idx.begin() + n_test);
    s.train.assign(idx.begin() + n_test, idx.end());
    std::sort(s.test.begin(), s.test.end());
    std::sort(s.train.begin(), s.train.end());

    s.folds.resize(plan.n_folds);
    std::vector<int> shuffled_train = s.train;
    rng.shuffle(shuffled_train);
    for (int i = 0; i < n_train; ++i)
        s.folds[i % plan.n_folds].push_back(shuffled_train[i]);
    for (auto& f : s.folds) std::sort(f.begin(), f.end());
    return s;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

} // namespace spca
