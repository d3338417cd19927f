#pragma once

#include <cstdint>

#include "spca/grassmann.hpp"
#include "spca/models.hpp"

namespace spca {

enum class Algorithm { alternating, substitution };
enum class Mode { cv, mle };

struct FitConfig {
    Method method = Method::lspca;
    Algorithm algorithm = Algorithm::alternating;
    Mode mode = Mode::cv;
    int r = 2;
    double lambda = 1.0;          // cv mode only; mle mode estimates it
    double outer_rel_tol = 1e-8;  // relative NLL change across an outer iteration
    int max_outer = 100;
    McgdOptions mcgd;             // grad_tol is scaled by max(1, ||X||_F) internally
    double lr_reg = 0.0;          // ridge stabilizer for the logistic subproblem
    std::uint64_t seed = 0;       // recorded for provenance; the fit itself is deterministic
};

struct FitResult {
    ModelParams params;
    Eigen::MatrixXd Z;               // n x r embedding, X * L
    std::vector<double> nll_trace;   // one entry per outer iteration, non-increasing
    double variation_explained = 0;
    bool converged = false;
    int iterations = 0;
    double wall_time_sec = 0;        // informational; excluded from determinism contracts
};

/// Alternating algorithm: optional nuisance update, then the L subproblem by
/// manifold conjugate gradient at fixed beta, then the beta subproblem at
/// fixed L, initialized from the top-r PCA basis. Returns the best iterate by
/// NLL.
FitResult fit_alternating(const Dataset& data, const FitConfig& config);

/// Substitution algorithm (lspca only): eliminates beta by plugging the least
/// squares solution beta*(L) = (XL)^+ Y into both the objective and the
/// gradient, then runs the L subproblem directly.
FitResult fit_substitution(const Dataset& data, const FitConfig& config);

/// Dispatch on config.algorithm.
FitResult fit(const Dataset& data, const FitConfig& config);

/// PCA followed by the regression/classification beta subproblem on the
/// scores; the fixed-subspace baseline the supervised fits are compared to.
FitResult fit_pc_baseline(const Dataset& data, int r, double lr_reg = 0.0);

} // namespace spca
