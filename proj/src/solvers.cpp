#include "spca/solvers.hpp"

#include <chrono>
#include <cmath>

#include "spca/baselines.hpp"
#include "spca/errors.hpp"
#include "spca/nuisance.hpp"

namespace spca {

namespace {

Eigen::MatrixXd solve_beta(const Dataset& data, const Eigen::MatrixXd& L, Method method,
                           double lr_reg) {
    return method == Method::lspca ? solve_beta_ls(data.X, data.Y, L)
                                   : solve_beta_lr(data.X, data.Y, L, lr_reg);
}

struct Nuisance {
    double lambda;
    double gamma = 1.0;
    std::optional<double> sigma_x2;
    std::optional<double> alpha;
    std::optional<double> sigma_y2;
};

ModelParams assemble(const Eigen::MatrixXd& L, const Eigen::MatrixXd& beta, const Nuisance& nu) {
    ModelParams mp;
    mp.L = L;
    mp.beta = beta;
    mp.lambda = nu.lambda;
    mp.gamma = nu.gamma;
    mp.sigma_x2 = nu.sigma_x2;
    mp.alpha = nu.alpha;
    mp.sigma_y2 = nu.sigma_y2;
    return mp;
}

double outer_nll(const Dataset& data, const FitConfig& cfg, const Eigen::MatrixXd& L,
                 const Eigen::MatrixXd& beta, const Nuisance& nu) {
    return nll(assemble(L, beta, nu), cfg.method, data,
               cfg.mode == Mode::cv ? NllMode::cv : NllMode::mle);
}

void apply_update(Nuisance& nu, const NuisanceUpdate& u) {
    nu.lambda = u.lambda;
    nu.gamma = u.gamma;
    nu.sigma_x2 = u.sigma_x2;
    nu.alpha = u.alpha;
    nu.sigma_y2 = u.sigma_y2;
}

CostOracle fixed_beta_cost(const Dataset& data, const FitConfig& cfg,
                           const Eigen::MatrixXd& beta, const Nuisance& nu) {
    CostOracle oracle;
    oracle.eval = [&data, &cfg, beta, nu](const Eigen::MatrixXd& L) {
        return nll(assemble(L, beta, nu), cfg.method, data, NllMode::cv);
    };
    oracle.euclidean_grad = [&data, &cfg, beta, nu](const Eigen::MatrixXd& L) {
        return euclidean_grad_L(assemble(L, beta, nu), cfg.method, data);
    };
    return oracle;
}

CostOracle substituted_cost(const Dataset& data, const Nuisance& nu) {
    CostOracle oracle;
    oracle.eval = [&data, nu](const Eigen::MatrixXd& L) {
        const Eigen::MatrixXd beta = solve_beta_ls(data.X, data.Y, L);
        return nll(assemble(L, beta, nu), Method::lspca, data, NllMode::cv);
    };
    oracle.euclidean_grad = [&data, nu](const Eigen::MatrixXd& L) {
        const Eigen::MatrixXd beta = solve_beta_ls(data.X, data.Y, L);
        return euclidean_grad_L(assemble(L, beta, nu), Method::lspca, data);
    };
    return oracle;
}

void validate_config(const Dataset& data, const FitConfig& cfg) {
    if (cfg.r < 1) throw std::invalid_argument("r must be positive");
    if (cfg.mode == Mode::mle && cfg.r >= data.p())
        throw std::invalid_argument("mle mode requires r < p");
    if (cfg.mode == Mode::cv && cfg.r > data.p())
        throw std::invalid_argument("r must not exceed p");
    if (cfg.mode == Mode::cv && cfg.lambda <= 0)
        throw std::invalid_argument("cv mode requires lambda > 0");
    if ((data.task == Task::regression) != (cfg.method == Method::lspca))
        throw std::invalid_argument("method does not match dataset task");
}

struct Snapshot {
    Eigen::MatrixXd L;
    Eigen::MatrixXd beta;
    Nuisance nu;
    double value;
};

FitResult finish(const Dataset& data, const Snapshot& best, std::vector<double> trace,
                 bool converged, int iterations,
                 std::chrono::steady_clock::time_point t0) {
    FitResult res;
    res.params = assemble(best.L, best.beta, best.nu);
    res.Z = data.X * best.L;
    res.nll_trace = std::move(trace);
    res.variation_explained = variation_explained(data.X, best.L);
    res.converged = converged;
    res.iterations = iterations;
    res.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace

FitResult fit_alternating(const Dataset& data, const FitConfig& config) {
    validate_config(data, config);
    const auto t0 = std::chrono::steady_clock::now();

    McgdOptions mopts = config.mcgd;
    mopts.grad_tol *= std::max(1.0, data.X.norm());

    Eigen::MatrixXd L = pca(data.X, config.r);
    Eigen::MatrixXd beta = solve_beta(data, L, config.method, config.lr_reg);
    Nuisance nu;
    nu.lambda = config.lambda;
    nu.gamma = 1.0;
    if (config.mode == Mode::mle)
        apply_update(nu, update_params(data.X, data.Y, L, beta, nu.gamma, config.method));

    std::vector<double> trace{outer_nll(data, config, L, beta, nu)};
    Snapshot best{L, beta, nu, trace.back()};
    double prev = trace.back();
    bool converged = false;
    int iter = 0;

    for (iter = 1; iter <= config.max_outer; ++iter) {
        if (config.mode == Mode::mle && iter > 1)
            apply_update(nu, update_params(data.X, data.Y, L, beta, nu.gamma, config.method));

        McgdResult step;
        try {
            step = mcgd(fixed_beta_cost(data, config, beta, nu), GrassmannPoint{L}, mopts);
        } catch (const NumericalError& e) {
            throw NumericalError("outer iteration " + std::to_string(iter) + ": " + e.what());
        }
        L = step.L.L;
        beta = solve_beta(data, L, config.method, config.lr_reg);

        const double value = outer_nll(data, config, L, beta, nu);
        trace.push_back(value);
        if (value > prev + 1e-10 * std::max(1.0, std::abs(prev)))
            throw NumericalError("NLL increased across outer iteration " + std::to_string(iter));
        if (value < best.value) best = Snapshot{L, beta, nu, value};
        if (std::abs(prev - value) <= config.outer_rel_tol * std::max(1.0, std::abs(prev))) {
            converged = true;
            break;
        }
        prev = value;
    }

    return finish(data, best, std::move(trace), converged, std::min(iter, config.max_outer), t0);
}

FitResult fit_substitution(const Dataset& data, const FitConfig& config) {
    if (config.method != Method::lspca)
        throw std::invalid_argument("substitution algorithm applies to lspca only");
    validate_config(data, config);
    const auto t0 = std::chrono::steady_clock::now();

    McgdOptions mopts = config.mcgd;
    mopts.grad_tol *= std::max(1.0, data.X.norm());

    Eigen::MatrixXd L = pca(data.X, config.r);
    Nuisance nu;
    nu.lambda = config.lambda;
    nu.gamma = 1.0;
    if (config.mode == Mode::mle) {
        const Eigen::MatrixXd beta0 = solve_beta_ls(data.X, data.Y, L);
        apply_update(nu, update_params(data.X, data.Y, L, beta0, nu.gamma, Method::lspca));
    }

    auto current = [&](const Eigen::MatrixXd& Lc) {
        return outer_nll(data, config, Lc, solve_beta_ls(data.X, data.Y, Lc), nu);
    };

    std::vector<double> trace{current(L)};
    Snapshot best{L, solve_beta_ls(data.X, data.Y, L), nu, trace.back()};
    double prev = trace.back();
    bool converged = false;
    int iter = 0;

    for (iter = 1; iter <= config.max_outer; ++iter) {
        if (config.mode == Mode::mle && iter > 1) {
            const Eigen::MatrixXd beta = solve_beta_ls(data.X, data.Y, L);
            apply_update(nu, update_params(data.X, data.Y, L, beta, nu.gamma, Method::lspca));
        }

        McgdResult step;
        try {
            step = mcgd(substituted_cost(data, nu), GrassmannPoint{L}, mopts);
        } catch (const NumericalError& e) {
            throw NumericalError("outer iteration " + std::to_string(iter) + ": " + e.what());
        }
        L = step.L.L;

        const double value = current(L);
        trace.push_back(value);
        if (value > prev + 1e-10 * std::max(1.0, std::abs(prev)))
            throw NumericalError("NLL increased across outer iteration " + std::to_string(iter));
        if (value < best.value) best = Snapshot{L, solve_beta_ls(data.X, data.Y, L), nu, value};
        if (std::abs(prev - value) <= config.outer_rel_tol * std::max(1.0, std::abs(prev))) {
            converged = true;
            break;
        }
        prev = value;
    }

    return finish(data, best, std::move(trace), converged, std::min(iter, config.max_outer), t0);
}

FitResult fit(const Dataset& data, const FitConfig& config) {
    return config.algorithm == Algorithm::substitution ? fit_substitution(data, config)
                                                       : fit_alternating(data, config);
}

FitResult fit_pc_baseline(const Dataset& data, int r, double lr_reg) {
    const auto t0 = std::chrono::steady_clock::now();
    const Method method = data.task == Task::regression ? Method::lspca : Method::lrpca;
    FitResult res;
    res.params.L = pca(data.X, r);
    res.params.beta = solve_beta(data, res.params.L, method, lr_reg);
    res.params.lambda = 0.0;
    res.params.gamma = 1.0;
    res.Z = data.X * res.params.L;
    const Eigen::MatrixXd scores = res.Z * res.params.beta;
    res.nll_trace = {method == Method::lspca ? (data.Y - scores).squaredNorm()
                                             : softmax_nll(scores, data.Y)};
    res.variation_explained = variation_explained(data.X, res.params.L);
    res.converged = true;
    res.iterations = 0;
    res.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace spca
