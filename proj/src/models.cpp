#include "spca/models.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "spca/errors.hpp"

namespace spca {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
    Eigen::MatrixXd P(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const Eigen::ArrayXd shifted = scores.row(i).array() - scores.row(i).maxCoeff();
        const Eigen::ArrayXd e = shifted.exp();
        P.row(i) = (e / e.sum()).matrix();
    }
    return P;
}

double softmax_nll(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& Y) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double m = scores.row(i).maxCoeff();
        const double lse = m + std::log((scores.row(i).array() - m).exp().sum());
        for (Eigen::Index j = 0; j < scores.cols(); ++j)
            if (Y(i, j) != 0.0) total += Y(i, j) * (lse - scores(i, j));
    }
    return total;
}

namespace {

double pca_residual(const Eigen::MatrixXd& X, const Eigen::MatrixXd& L, double gamma) {
    if (gamma == 0.0) return X.squaredNorm();
    const Eigen::MatrixXd XL = X * L;
    return (X - gamma * XL * L.transpose()).squaredNorm();
}

void check_shapes(const ModelParams& params, const Dataset& data) {
    if (params.L.rows() != data.p()) throw std::invalid_argument("L rows must equal p");
    if (params.beta.rows() != params.L.cols())
        throw std::invalid_argument("beta rows must equal r");
    if (params.beta.cols() != data.q()) throw std::invalid_argument("beta cols must equal q");
}

} // namespace

double nll(const ModelParams& params, Method method, const Dataset& data, NllMode mode) {
    check_shapes(params, data);
    const Eigen::MatrixXd& X = data.X;
    const Eigen::MatrixXd& Y = data.Y;
    const double n = static_cast<double>(data.n());
    const double p = static_cast<double>(data.p());
    const double q = static_cast<double>(data.q());
    const double r = static_cast<double>(params.L.cols());
    const Eigen::MatrixXd scores = (X * params.L) * params.beta;

    double value;
    if (mode == NllMode::cv) {
        const double loss = method == Method::lspca ? (Y - scores).squaredNorm()
                                                    : softmax_nll(scores, Y);
        value = loss + params.lambda * pca_residual(X, params.L, params.gamma);
    } else {
        if (!params.sigma_x2 || !params.alpha)
            throw std::invalid_argument("mle-mode nll requires sigma_x2 and alpha");
        const double sx2 = *params.sigma_x2;
        const double a = *params.alpha;
        if (sx2 <= 0) throw std::invalid_argument("sigma_x2 must be positive");
        if (a < 0) throw std::invalid_argument("alpha must be nonnegative");
        const double gamma = 1.0 - std::sqrt(sx2 / (sx2 + a));
        value = pca_residual(X, params.L, gamma) / (2.0 * sx2) +
                0.5 * n * ((p - r) * std::log(sx2) + r * std::log(sx2 + a));
        if (method == Method::lspca) {
            if (!params.sigma_y2) throw std::invalid_argument("lspca mle nll requires sigma_y2");
            const double sy2 = *params.sigma_y2;
            if (sy2 <= 0) throw std::invalid_argument("sigma_y2 must be positive");
            value += (Y - scores).squaredNorm() / (2.0 * sy2) + 0.5 * n * q * std::log(sy2);
        } else {
            value += softmax_nll(scores, Y);
        }
    }
    if (!std::isfinite(value)) throw NumericalError("non-finite objective value");
    return value;
}

Eigen::MatrixXd euclidean_grad_L(const ModelParams& params, Method method, const Dataset& data) {
    check_shapes(params, data);
    const Eigen::MatrixXd& X = data.X;
    const Eigen::MatrixXd& Y = data.Y;
    const Eigen::MatrixXd& L = params.L;
    const double gamma = params.gamma;
    const Eigen::MatrixXd XL = X * L;
    const Eigen::MatrixXd scores = XL * params.beta;

    // d/dL of lambda * ||X - gamma X L L'||_F^2, with X'X applied as products
    const Eigen::MatrixXd XtXL = X.transpose() * XL;
    Eigen::MatrixXd grad = params.lambda *
        ((2.0 * gamma * gamma - 4.0 * gamma) * XtXL +
         2.0 * gamma * gamma * L * (L.transpose() * XtXL));

    if (method == Method::lspca) {
        grad.noalias() += -2.0 * X.transpose() * (Y - scores) * params.beta.transpose();
    } else {
        const Eigen::MatrixXd P = softmax_rows(scores);
        grad.noalias() += X.transpose() * (P - Y) * params.beta.transpose();
    }
    if (!grad.allFinite()) throw NumericalError("non-finite gradient");
    return grad;
}

Eigen::MatrixXd solve_beta_ls(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                              const Eigen::MatrixXd& L) {
    const Eigen::MatrixXd Z = X * L;
    const Eigen::MatrixXd A = Z.transpose() * Z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin > 0 && lmax / lmin < 1e12) {
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() == Eigen::Success) return llt.solve(Z.transpose() * Y);
    }
    // minimum-norm solution (XL)^+ Y for ill-conditioned or rank-deficient Z
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.solve(Y);
}

Eigen::MatrixXd solve_beta_lr(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                              const Eigen::MatrixXd& L, double reg) {
    const Eigen::MatrixXd Z = X * L;
    const Eigen::Index n = Z.rows(), r = Z.cols(), q = Y.cols();
    if (q < 2) throw std::invalid_argument("logistic solve needs at least two classes");
    if (reg < 0) throw std::invalid_argument("reg must be nonnegative");

    const Eigen::Index m = r * (q - 1);  // free parameters; last class pinned to zero
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(r, q);

    auto objective = [&](const Eigen::MatrixXd& beta) {
        return softmax_nll(Z * beta, Y) + 0.5 * reg * beta.leftCols(q - 1).squaredNorm();
    };

    double fval = objective(B);
    for (int iter = 0; iter < 100; ++iter) {
        const Eigen::MatrixXd P = softmax_rows(Z * B);
        const Eigen::MatrixXd G_full = Z.transpose() * (P - Y);
        Eigen::VectorXd g(m);
        for (Eigen::Index j = 0; j < q - 1; ++j)
            g.segment(j * r, r) = G_full.col(j) + reg * B.col(j);
        if (g.norm() <= 1e-8) break;

        Eigen::MatrixXd H(m, m);
        for (Eigen::Index j = 0; j < q - 1; ++j) {
            for (Eigen::Index k = j; k < q - 1; ++k) {
                Eigen::VectorXd w(n);
                for (Eigen::Index i = 0; i < n; ++i)
                    w(i) = P(i, j) * ((j == k ? 1.0 : 0.0) - P(i, k));
                const Eigen::MatrixXd block = Z.transpose() * w.asDiagonal() * Z;
                H.block(j * r, k * r, r, r) = block;
                if (k != j) H.block(k * r, j * r, r, r) = block.transpose();
            }
            H.block(j * r, j * r, r, r) += reg * Eigen::MatrixXd::Identity(r, r);
        }

        Eigen::LLT<Eigen::MatrixXd> llt(H);
        Eigen::VectorXd step;
        if (llt.info() == Eigen::Success) {
            step = llt.solve(-g);
        } else {
            // numerical floor when the Hessian is singular
            H += 1e-8 * Eigen::MatrixXd::Identity(m, m);
            step = H.ldlt().solve(-g);
        }

        const double slope = g.dot(step);
        double t = 1.0;
        bool accepted = false;
        for (int b = 0; b < 60; ++b) {
            Eigen::MatrixXd B_try = B;
            for (Eigen::Index j = 0; j < q - 1; ++j)
                B_try.col(j) += t * step.segment(j * r, r);
            const double f_try = objective(B_try);
            if (f_try <= fval + 1e-4 * t * slope) {
                B = std::move(B_try);
                fval = f_try;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // no further progress representable
        if (B.norm() > 1e6)
            throw NumericalError(
                "logistic coefficients diverging (separable classes); set reg > 0");
    }
    return B;
}

Prediction predict_from_embedding(const ModelParams& params, Method method,
                                  const Centering& centering, const Eigen::MatrixXd& Z) {
    if (Z.cols() != params.beta.rows())
        throw std::invalid_argument("embedding width must equal r");
    Prediction out;
    const Eigen::MatrixXd scores = Z * params.beta;
    if (method == Method::lspca) {
        out.values = scores;
        if (centering.y_mean.size() == scores.cols())
            out.values.rowwise() += centering.y_mean.transpose();
    } else {
        out.values = softmax_rows(scores);
        out.labels.resize(static_cast<std::size_t>(scores.rows()));
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            int best = 0;
            for (Eigen::Index j = 1; j < out.values.cols(); ++j)
                if (out.values(i, j) > out.values(i, best)) best = static_cast<int>(j);
            out.labels[static_cast<std::size_t>(i)] = best;
        }
    }
    return out;
}

Prediction predict(const ModelParams& params, Method method, const Centering& centering,
                   const Eigen::MatrixXd& X_new_raw) {
    const Eigen::MatrixXd Xc = apply_centering(centering, X_new_raw);
    if (Xc.cols() != params.L.rows())
        throw std::invalid_argument("feature count mismatch in predict");
    return predict_from_embedding(params, method, centering, Xc * params.L);
}

} // namespace spca
