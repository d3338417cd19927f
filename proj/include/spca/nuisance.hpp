#pragma once

#include <Eigen/Core>
#include <optional>

#include "spca/models.hpp"

namespace spca {

struct NuisanceUpdate {
    double gamma;
    double lambda;
    double sigma_x2;
    double alpha;
    std::optional<double> sigma_y2;  // lspca only
};

/// Closed-form maximum likelihood updates of the nuisance parameters at fixed
/// (L, beta). The sigma_x2 branch is selected by the positivity of the
/// previous gamma; alpha is clamped at zero; gamma and lambda follow from the
/// reparameterization. Requires r < p and a strictly positive noise estimate.
NuisanceUpdate update_params(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                             const Eigen::MatrixXd& L, const Eigen::MatrixXd& beta,
                             double gamma_prev, Method method);

/// The lambda that makes the gamma = 1 objective share its minimizer with the
/// (lambda, gamma) objective: lambda * gamma * (2 - gamma). Valid for
/// gamma in (0, 1].
double cv_lambda_equivalent(double lambda, double gamma);

} // namespace spca
