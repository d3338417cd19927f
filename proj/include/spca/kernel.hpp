#pragma once

#include <Eigen/Core>

#include "spca/solvers.hpp"

namespace spca {

enum class KernelKind { linear, rbf };

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double bandwidth = 1.0;  // rbf: k(x,y) = exp(-||x-y||^2 / (2 bandwidth^2))
};

/// Gram matrix K_ij = k(row_i, row_j). Symmetric; rbf diagonal is all ones.
Eigen::MatrixXd gram(const Eigen::MatrixXd& rows, const KernelSpec& spec);

/// Kernel value between two single points.
double kernel_value(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelSpec& spec);

/// Doubly centered Gram matrix H K H with the aggregates needed for
/// out-of-sample evaluation against the training inputs.
struct CenteredKernel {
    Eigen::MatrixXd Ktilde;      // n x n
    Eigen::MatrixXd train_rows;  // centered training inputs (empty if built from K only)
    Eigen::VectorXd row_mean;    // row means of the uncentered K
    double grand_mean = 0;
    KernelSpec spec;
};

/// Pure Gram centering: K - (1/n) 11'K - (1/n) K 11' + (1/n^2) 11'K 11'.
CenteredKernel center_gram(const Eigen::MatrixXd& K);

/// Kernel + centering over already-centered feature rows, retaining the rows.
CenteredKernel build_centered_kernel(const Eigen::MatrixXd& centered_rows,
                                     const KernelSpec& spec);

/// Top-r unit eigenvectors of Ktilde (descending eigenvalues), deterministic
/// sign convention. Errors when r exceeds the numerical rank.
Eigen::MatrixXd kpca(const Eigen::MatrixXd& Ktilde, int r);

/// Centered kernel row of a new point against the training set:
/// j -> k(x, x_j) - mean_i k(x, x_i) - mean_i k(x_i, x_j) + grand mean.
Eigen::VectorXd centered_kernel_row(const CenteredKernel& ck, const Eigen::VectorXd& x_new);

/// Projection of a new (already feature-centered) point onto the subspace:
/// the centered kernel row times L. Reproduces rows of Ktilde * L on training
/// points.
Eigen::VectorXd project_new(const CenteredKernel& ck, const Eigen::MatrixXd& L,
                            const Eigen::VectorXd& x_new);

/// Batch form of project_new over rows of X_new.
Eigen::MatrixXd project_rows(const CenteredKernel& ck, const Eigen::MatrixXd& L,
                             const Eigen::MatrixXd& X_new);

/// Median pairwise distance over rows; the default rbf bandwidth.
double median_bandwidth(const Eigen::MatrixXd& rows);

/// Runs the configured solver with the centered kernel matrix substituted for
/// X (so p = n). The returned embedding Z equals Ktilde * L.
FitResult fit_kernel_spca(const Dataset& data, const KernelSpec& spec, const FitConfig& config);

/// The kernel dataset the fit operates on (Ktilde in place of X); exposed for
/// evaluation code that needs the same view.
Dataset kernel_dataset(const Dataset& data, const CenteredKernel& ck);

} // namespace spca
