#include "spca/baselines.hpp"

#include <Eigen/Dense>
#include <cstdio>
#include <cstdlib>

#include "spca/errors.hpp"

namespace spca {

namespace {

void fix_column_signs(Eigen::MatrixXd& L) {
    for (Eigen::Index j = 0; j < L.cols(); ++j) {
        Eigen::Index imax = 0;
        L.col(j).cwiseAbs().maxCoeff(&imax);
        if (L(imax, j) < 0) L.col(j) = -L.col(j);
    }
}

bool warnings_enabled() {
    const char* lvl = std::getenv("SPCA_LOG");
    return lvl == nullptr || std::string(lvl) != "quiet";
}

} // namespace

Eigen::MatrixXd pca(const Eigen::MatrixXd& X, int r) {
    if (r < 1 || r > X.cols()) throw std::invalid_argument("pca: r must lie in [1, p]");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    if (r > s.size() || s(r - 1) <= 1e-12 * s(0))
        throw NumericalError("pca: rank of X below requested dimension");
    if (r < s.size() && s(r - 1) - s(r) < 1e-10 * s(0) && warnings_enabled())
        std::fprintf(stderr,
                     "warning: tied singular values at the rank-%d boundary; "
                     "subspace selection resolved by deterministic tie-break\n", r);
    Eigen::MatrixXd L = svd.matrixV().leftCols(r);
    fix_column_signs(L);
    return L;
}

Eigen::MatrixXd pinv_solve(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.solve(B);
}

RrrResult rrr(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, int r) {
    if (r < 1 || r > std::min(X.cols(), Y.cols()))
        throw std::invalid_argument("rrr: r must lie in [1, min(p, q)]");
    const Eigen::MatrixXd B_ols = pinv_solve(X, Y);
    const Eigen::MatrixXd fitted = X * B_ols;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(fitted, Eigen::ComputeThinV);
    if (svd.singularValues()(r - 1) <= 1e-12 * svd.singularValues()(0))
        throw NumericalError("rrr: fitted values have rank below r");
    const Eigen::MatrixXd V_r = svd.matrixV().leftCols(r);

    RrrResult out;
    out.coefficients = B_ols * V_r * V_r.transpose();
    // orthonormal basis of the predictor-side column space of the coefficients
    Eigen::JacobiSVD<Eigen::MatrixXd> csvd(out.coefficients,
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd L = csvd.matrixU().leftCols(r);
    fix_column_signs(L);
    out.L = L;
    out.beta = L.transpose() * out.coefficients;
    return out;
}

} // namespace spca
