#include "spca/kernel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "spca/errors.hpp"

namespace spca {

double kernel_value(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelSpec& spec) {
    switch (spec.kind) {
        case KernelKind::linear:
            return a.dot(b);
        case KernelKind::rbf:
            if (spec.bandwidth <= 0) throw std::invalid_argument("rbf bandwidth must be positive");
            return std::exp(-(a - b).squaredNorm() / (2.0 * spec.bandwidth * spec.bandwidth));
    }
    throw std::invalid_argument("unknown kernel");
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& rows, const KernelSpec& spec) {
    const Eigen::Index n = rows.rows();
    if (spec.kind == KernelKind::linear) return rows * rows.transpose();
    if (spec.bandwidth <= 0) throw std::invalid_argument("rbf bandwidth must be positive");
    const Eigen::VectorXd sq = rows.rowwise().squaredNorm();
    Eigen::MatrixXd D2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                         2.0 * rows * rows.transpose();
    D2 = D2.cwiseMax(0.0);
    return (-D2 / (2.0 * spec.bandwidth * spec.bandwidth)).array().exp();
}

namespace {

CenteredKernel center_impl(const Eigen::MatrixXd& K) {
    const Eigen::Index n = K.rows();
    if (K.cols() != n) throw std::invalid_argument("Gram matrix must be square");
    CenteredKernel ck;
    ck.row_mean = K.rowwise().mean();
    ck.grand_mean = ck.row_mean.mean();
    ck.Ktilde = K;
    ck.Ktilde.colwise() -= ck.row_mean;
    ck.Ktilde.rowwise() -= ck.row_mean.transpose();
    ck.Ktilde.array() += ck.grand_mean;
    // symmetrize away roundoff
    ck.Ktilde = 0.5 * (ck.Ktilde + ck.Ktilde.transpose()).eval();
    return ck;
}

} // namespace

CenteredKernel center_gram(const Eigen::MatrixXd& K) { return center_impl(K); }

CenteredKernel build_centered_kernel(const Eigen::MatrixXd& centered_rows,
                                     const KernelSpec& spec) {
    CenteredKernel ck = center_impl(gram(centered_rows, spec));
    ck.train_rows = centered_rows;
    ck.spec = spec;
    return ck;
}

Eigen::MatrixXd kpca(const Eigen::MatrixXd& Ktilde, int r) {
    const Eigen::Index n = Ktilde.rows();
    if (r < 1 || r > n) throw std::invalid_argument("kpca: r must lie in [1, n]");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Ktilde);
    if (eig.info() != Eigen::Success) throw NumericalError("kpca: eigendecomposition failed");
    const Eigen::VectorXd evals = eig.eigenvalues();  // ascending
    const double lmax = evals(n - 1);
    if (lmax <= 0 || evals(n - r) <= 1e-10 * lmax)
        throw NumericalError("kpca: r exceeds the numerical rank of the centered Gram matrix");
    Eigen::MatrixXd L(n, r);
    for (int j = 0; j < r; ++j) {
        Eigen::VectorXd v = eig.eigenvectors().col(n - 1 - j);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0) v = -v;
        L.col(j) = v;
    }
    return L;
}

Eigen::VectorXd centered_kernel_row(const CenteredKernel& ck, const Eigen::VectorXd& x_new) {
    if (ck.train_rows.size() == 0)
        throw std::invalid_argument("centered kernel lacks training rows for out-of-sample use");
    if (x_new.size() != ck.train_rows.cols())
        throw std::invalid_argument("dimension mismatch in kernel projection");
    const Eigen::Index n = ck.train_rows.rows();
    Eigen::VectorXd k_row(n);
    for (Eigen::Index j = 0; j < n; ++j)
        k_row(j) = kernel_value(x_new, ck.train_rows.row(j).transpose(), ck.spec);
    const double row_avg = k_row.mean();
    return k_row.array() - row_avg - ck.row_mean.array() + ck.grand_mean;
}

Eigen::VectorXd project_new(const CenteredKernel& ck, const Eigen::MatrixXd& L,
                            const Eigen::VectorXd& x_new) {
    return L.transpose() * centered_kernel_row(ck, x_new);
}

Eigen::MatrixXd project_rows(const CenteredKernel& ck, const Eigen::MatrixXd& L,
                             const Eigen::MatrixXd& X_new) {
    Eigen::MatrixXd Z(X_new.rows(), L.cols());
    for (Eigen::Index i = 0; i < X_new.rows(); ++i)
        Z.row(i) = project_new(ck, L, X_new.row(i).transpose()).transpose();
    return Z;
}

double median_bandwidth(const Eigen::MatrixXd& rows) {
    const Eigen::Index n = rows.rows();
    if (n < 2) throw std::invalid_argument("median bandwidth needs at least two rows");
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            dists.push_back((rows.row(i) - rows.row(j)).norm());
    std::sort(dists.begin(), dists.end());
    const std::size_t m = dists.size();
    double med = m % 2 ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
    if (med <= 0) throw NumericalError("median pairwise distance is zero (duplicate rows)");
    return med;
}

Dataset kernel_dataset(const Dataset& data, const CenteredKernel& ck) {
    Dataset kd;
    kd.X = ck.Ktilde;
    kd.Y = data.Y;
    kd.task = data.task;
    // Ktilde rows/columns are centered by construction
    kd.x_mean = Eigen::VectorXd::Zero(ck.Ktilde.cols());
    kd.x_scale = Eigen::VectorXd::Ones(ck.Ktilde.cols());
    kd.y_mean = data.y_mean;
    return kd;
}

FitResult fit_kernel_spca(const Dataset& data, const KernelSpec& spec, const FitConfig& config) {
    const CenteredKernel ck = build_centered_kernel(data.X, spec);
    return fit(kernel_dataset(data, ck), config);
}

} // namespace spca
