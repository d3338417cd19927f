#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace spca {

/// Re-orthonormalizes via thin QR with the diagonal of R forced positive, so
/// the result is a deterministic function of the input.
Eigen::MatrixXd qr_orthonormalize(const Eigen::MatrixXd& M);

/// A p x r matrix with orthonormal columns representing an r-dimensional
/// subspace of R^p. Construction repairs drift beyond 1e-8.
struct GrassmannPoint {
    Eigen::MatrixXd L;

    static GrassmannPoint from(Eigen::MatrixXd M);

    Eigen::Index p() const { return L.rows(); }
    Eigen::Index r() const { return L.cols(); }
    double orthonormality_error() const;
};

/// Basis-free distance between subspaces: ||L1 L1' - L2 L2'||_F / sqrt(2).
double chordal_distance(const Eigen::MatrixXd& L1, const Eigen::MatrixXd& L2);

/// Projects M onto the tangent space at L: (I - LL') M.
Eigen::MatrixXd tangent_project(const Eigen::MatrixXd& L, const Eigen::MatrixXd& M);

/// Moves along the geodesic from L with tangent direction C for step t, via
/// the compact SVD C = U S V':  L(t) = L V cos(St) V' + U sin(St) V'.
GrassmannPoint geodesic_step(const GrassmannPoint& L, const Eigen::MatrixXd& C, double t);

/// Objective and Euclidean gradient for minimization over the Grassmannian.
/// eval must be invariant to right-rotation of L.
struct CostOracle {
    std::function<double(const Eigen::MatrixXd&)> eval;
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> euclidean_grad;
};

struct McgdIterate {
    int iter;
    const Eigen::MatrixXd& L;
    const Eigen::MatrixXd& grad;       // Riemannian gradient at L
    const Eigen::MatrixXd& direction;  // search direction used for the step
    double step;
    double value;
};

struct McgdOptions {
    int max_iters = 500;
    double grad_tol = 1e-6;       // on the Riemannian gradient Frobenius norm
    double rel_obj_tol = 1e-10;   // on |f_k - f_{k+1}| / max(1, |f_k|)
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 50;
    std::function<void(const McgdIterate&)> observer;  // invoked after each accepted step
};

struct McgdResult {
    GrassmannPoint L;
    std::vector<double> trace;  // objective value per iterate, starting at L0
    bool converged = false;
    int iterations = 0;
    double grad_norm = 0.0;
};

/// Conjugate gradient descent over the Grassmannian with geodesic steps,
/// parallel-transported directions, Armijo backtracking, and a steepest
/// descent reset every r(p-r) iterations or whenever the conjugate direction
/// fails to descend.
McgdResult mcgd(const CostOracle& cost, const GrassmannPoint& L0, const McgdOptions& opts = {});

} // namespace spca
