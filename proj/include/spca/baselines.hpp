#pragma once

#include <Eigen/Core>

namespace spca {

/// Top-r right-singular subspace of X (descending singular values), with the
/// largest-magnitude entry of each column made positive for determinism.
/// Warns on stderr when the r/r+1 singular values are numerically tied.
Eigen::MatrixXd pca(const Eigen::MatrixXd& X, int r);

/// Closed-form reduced rank regression: B_ols = X^+ Y, V_r the top right
/// singular vectors of X * B_ols, coefficients = B_ols V_r V_r'.
struct RrrResult {
    Eigen::MatrixXd coefficients;  // p x q, rank <= r
    Eigen::MatrixXd L;             // p x r orthonormal basis of the predictor subspace
    Eigen::MatrixXd beta;          // r x q so that L * beta = coefficients
};
RrrResult rrr(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, int r);

/// Minimum-norm pseudoinverse solve X^+ B via SVD.
Eigen::MatrixXd pinv_solve(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B);

} // namespace spca
