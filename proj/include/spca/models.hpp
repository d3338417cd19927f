#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "spca/dataset.hpp"

namespace spca {

enum class Method { lspca, lrpca };

/// Full parameter set of a fitted model. lambda/gamma are the working
/// parameterization; sigma_x2/alpha/sigma_y2 are populated by the maximum
/// likelihood updates and absent for cross-validated fits.
struct ModelParams {
    Eigen::MatrixXd L;     // p x r, orthonormal columns
    Eigen::MatrixXd beta;  // r x q (last column pinned to zero for lrpca)
    double lambda = 1.0;
    double gamma = 1.0;
    std::optional<double> sigma_x2;
    std::optional<double> alpha;
    std::optional<double> sigma_y2;  // lspca only
};

enum class NllMode { cv, mle };

/// Row-wise softmax with per-row max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

/// Multinomial negative log likelihood of one-hot Y given scores Z*beta.
double softmax_nll(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& Y);

/// Objective value. cv mode is the constant-free weighted form
///   loss(L, beta) + lambda * ||X - gamma X L L'||_F^2
/// with loss = ||Y - XL beta||_F^2 (lspca) or the multinomial NLL (lrpca).
/// mle mode is the exact joint negative log likelihood up to the 2*pi
/// constant, including the log-determinant terms, so values are comparable
/// across nuisance parameter settings.
double nll(const ModelParams& params, Method method, const Dataset& data, NllMode mode);

/// d/dL of the cv-mode objective at fixed beta, lambda, gamma. Composing with
/// tangent_project gives the Riemannian gradient.
Eigen::MatrixXd euclidean_grad_L(const ModelParams& params, Method method, const Dataset& data);

/// Least squares coefficients for min ||Y - XL beta||_F^2. Uses Cholesky on
/// the normal equations when well conditioned, otherwise the minimum-norm
/// pseudoinverse solution.
Eigen::MatrixXd solve_beta_ls(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                              const Eigen::MatrixXd& L);

/// Multinomial logistic coefficients on features XL by damped Newton, with the
/// last class column pinned to zero and an optional ridge term reg.
Eigen::MatrixXd solve_beta_lr(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                              const Eigen::MatrixXd& L, double reg = 0.0);

struct Prediction {
    Eigen::MatrixXd values;   // regression: n x q predictions; classification: n x q probabilities
    std::vector<int> labels;  // classification only; ties broken by lowest class index
};

/// Predicts on raw (uncentered) rows using the training centering statistics.
Prediction predict(const ModelParams& params, Method method, const Centering& centering,
                   const Eigen::MatrixXd& X_new_raw);

/// Prediction from an already-centered embedding Z = X L (used by the kernel
/// path, where projection happens in kernel space).
Prediction predict_from_embedding(const ModelParams& params, Method method,
                                  const Centering& centering, const Eigen::MatrixXd& Z);

} // namespace spca
