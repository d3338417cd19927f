#include "spca/nuisance.hpp"

#include <cmath>

#include "spca/errors.hpp"

namespace spca {

NuisanceUpdate update_params(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                             const Eigen::MatrixXd& L, const Eigen::MatrixXd& beta,
                             double gamma_prev, Method method) {
    const double n = static_cast<double>(X.rows());
    const double p = static_cast<double>(X.cols());
    const double r = static_cast<double>(L.cols());
    if (L.cols() >= X.cols())
        throw std::invalid_argument("maximum likelihood updates require r < p");

    const double x_norm2 = X.squaredNorm();
    const Eigen::MatrixXd XL = X * L;
    const double xl_norm2 = XL.squaredNorm();

    NuisanceUpdate u{};
    u.sigma_x2 = gamma_prev > 1e-15 ? (x_norm2 - xl_norm2) / (n * (p - r))
                                    : x_norm2 / (n * p);
    if (u.sigma_x2 <= 0) throw NumericalError("degenerate noise estimate: sigma_x2 <= 0");
    u.alpha = std::max(xl_norm2 / (n * r) - u.sigma_x2, 0.0);
    u.gamma = 1.0 - std::sqrt(u.sigma_x2 / (u.sigma_x2 + u.alpha));

    if (method == Method::lspca) {
        const double q = static_cast<double>(Y.cols());
        const double sy2 = (Y - XL * beta).squaredNorm() / (n * q);
        if (sy2 <= 0) throw NumericalError("degenerate noise estimate: sigma_y2 <= 0");
        u.sigma_y2 = sy2;
        u.lambda = sy2 / u.sigma_x2;
    } else {
        u.lambda = 1.0 / (2.0 * u.sigma_x2);
    }
    return u;
}

double cv_lambda_equivalent(double lambda, double gamma) {
    if (gamma <= 0.0 || gamma > 1.0)
        throw std::invalid_argument("gamma must lie in (0, 1]");
    return lambda * gamma * (2.0 - gamma);
}

} // namespace spca
