#include "spca/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

#include "spca/baselines.hpp"
#include "spca/errors.hpp"
#include "spca/rng.hpp"

namespace spca {

bool is_kernel_method(HarnessMethod m) {
    return m == HarnessMethod::klspca || m == HarnessMethod::klrpca ||
           m == HarnessMethod::kpcr || m == HarnessMethod::kpcc;
}

bool is_spca_method(HarnessMethod m) {
    return m == HarnessMethod::lspca || m == HarnessMethod::lrpca ||
           m == HarnessMethod::klspca || m == HarnessMethod::klrpca;
}

Task method_task(HarnessMethod m) {
    switch (m) {
        case HarnessMethod::lspca:
        case HarnessMethod::klspca:
        case HarnessMethod::pcr:
        case HarnessMethod::kpcr:
            return Task::regression;
        default:
            return Task::classification;
    }
}

std::string method_name(HarnessMethod m) {
    switch (m) {
        case HarnessMethod::lspca: return "lspca";
        case HarnessMethod::lrpca: return "lrpca";
        case HarnessMethod::klspca: return "klspca";
        case HarnessMethod::klrpca: return "klrpca";
        case HarnessMethod::pcr: return "pcr";
        case HarnessMethod::pcc: return "pcc";
        case HarnessMethod::kpcr: return "kpcr";
        case HarnessMethod::kpcc: return "kpcc";
    }
    return "?";
}

HarnessMethod parse_method(const std::string& name) {
    for (HarnessMethod m : {HarnessMethod::lspca, HarnessMethod::lrpca, HarnessMethod::klspca,
                            HarnessMethod::klrpca, HarnessMethod::pcr, HarnessMethod::pcc,
                            HarnessMethod::kpcr, HarnessMethod::kpcc})
        if (method_name(m) == name) return m;
    throw std::invalid_argument("unknown method: " + name);
}

Eigen::MatrixXd FittedModel::embed(const Eigen::MatrixXd& raw_rows) const {
    const Eigen::MatrixXd Xc = apply_centering(centering, raw_rows);
    if (kernel) return project_rows(*kernel, params.L, Xc);
    return Xc * params.L;
}

Prediction FittedModel::predict(const Eigen::MatrixXd& raw_rows) const {
    return predict_from_embedding(params, model_method(), centering, embed(raw_rows));
}

FittedModel fit_model(const Dataset& train, const FitSpec& spec) {
    auto run = [&](double lr_reg) {
        FittedModel fm;
        fm.method = spec.method;
        fm.mode = spec.mode;
        fm.task = train.task;
        fm.centering = train.centering();

        FitConfig cfg = spec.tuning;
        cfg.method = train.task == Task::regression ? Method::lspca : Method::lrpca;
        cfg.algorithm = spec.algorithm;
        cfg.mode = spec.mode;
        cfg.r = spec.r;
        cfg.lambda = spec.lambda;
        cfg.lr_reg = lr_reg;

        FitResult res;
        if (is_kernel_method(spec.method)) {
            KernelSpec ks{spec.kernel_kind, spec.bandwidth};
            if (ks.kind == KernelKind::rbf && (!(ks.bandwidth > 0)))
                ks.bandwidth = median_bandwidth(train.X);
            CenteredKernel ck = build_centered_kernel(train.X, ks);
            const Dataset kd = kernel_dataset(train, ck);
            res = is_spca_method(spec.method) ? fit(kd, cfg)
                                              : fit_pc_baseline(kd, spec.r, lr_reg);
            fm.kernel = std::move(ck);
        } else {
            res = is_spca_method(spec.method) ? fit(train, cfg)
                                              : fit_pc_baseline(train, spec.r, lr_reg);
        }
        fm.params = std::move(res.params);
        fm.train_nll = *std::min_element(res.nll_trace.begin(), res.nll_trace.end());
        fm.variation_explained = res.variation_explained;
        return fm;
    };

    try {
        return run(spec.lr_reg);
    } catch (const NumericalError& e) {
        // the logistic solver asks for a ridge when classes separate; obey once
        if (std::string(e.what()).find("set reg > 0") != std::string::npos)
            return run(std::max(spec.lr_reg, 1e-6));
        throw;
    }
}

double metrics(const Eigen::MatrixXd& yhat, const Eigen::MatrixXd& y_true, Task task) {
    if (yhat.rows() == 0 || y_true.rows() == 0) throw std::invalid_argument("empty input");
    if (yhat.rows() != y_true.rows() || yhat.cols() != y_true.cols())
        throw std::invalid_argument("shape mismatch in metrics");
    if (task == Task::regression)
        return (yhat - y_true).squaredNorm() / static_cast<double>(yhat.size());
    double wrong = 0;
    for (Eigen::Index i = 0; i < yhat.rows(); ++i)
        if (yhat(i, 0) != y_true(i, 0)) wrong += 1;
    return wrong / static_cast<double>(yhat.rows());
}

double prediction_error(const Prediction& pred, const Eigen::MatrixXd& y_raw, Task task) {
    if (task == Task::regression) return metrics(pred.values, y_raw, task);
    Eigen::MatrixXd labels(static_cast<Eigen::Index>(pred.labels.size()), 1);
    for (std::size_t i = 0; i < pred.labels.size(); ++i)
        labels(static_cast<Eigen::Index>(i), 0) = pred.labels[i];
    return metrics(labels, y_raw, task);
}

std::vector<double> default_lambda_grid(const Dataset& train, int count) {
    const double x2 = train.X.squaredNorm();
    if (x2 <= 0) throw std::invalid_argument("cannot scale a lambda grid for zero data");
    const double n = static_cast<double>(train.n());
    double loss_scale;
    if (train.task == Task::regression) {
        loss_scale = train.Y.squaredNorm() / n;
        if (loss_scale <= 0) loss_scale = 1.0;
    } else {
        loss_scale = std::log(static_cast<double>(train.q()));
    }
    const double balance = n * loss_scale / x2;
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double lo = std::log(1e-4 * balance), hi = std::log(1e4 * balance);
    for (int i = 0; i < count; ++i)
        grid[static_cast<std::size_t>(i)] =
            std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
    return grid;
}

std::vector<double> default_bandwidth_grid(const Eigen::MatrixXd& centered_rows) {
    const double med = median_bandwidth(centered_rows);
    return {med / 4.0, med / 2.0, med, 2.0 * med, 4.0 * med};
}

namespace {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SPCA_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(int n_items, int width, const std::function<void(int)>& fn) {
    if (n_items <= 0) return;
    width = std::min(width, n_items);
    if (width <= 1) {
        for (int i = 0; i < n_items; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(width));
    for (int w = 0; w < width; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n_items) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

Dataset center_rows(const RawData& raw, const std::vector<int>& rows, bool standardize) {
    CenterOptions opts;
    opts.standardize = standardize;
    opts.n_classes = raw.n_classes;
    return center(take_rows(raw.X, rows), take_rows(raw.Y, rows), raw.task, opts);
}

struct Cell {
    int r = 2;
    double bandwidth = std::numeric_limits<double>::quiet_NaN();
    double lambda = std::numeric_limits<double>::quiet_NaN();
};

// tie order: smallest lambda, then bandwidth, then r; NaN compares equal
bool cell_key_less(const Cell& a, const Cell& b) {
    auto lt = [](double x, double y) {
        if (std::isnan(x) || std::isnan(y)) return false;
        return x < y;
    };
    if (lt(a.lambda, b.lambda)) return true;
    if (lt(b.lambda, a.lambda)) return false;
    if (lt(a.bandwidth, b.bandwidth)) return true;
    if (lt(b.bandwidth, a.bandwidth)) return false;
    return a.r < b.r;
}

std::vector<Cell> build_grid(const RawData& raw, const Dataset& train, HarnessMethod m,
                             const ExperimentPlan& plan) {
    (void)raw;
    std::vector<int> rs = plan.r_grid.empty() ? std::vector<int>{plan.r} : plan.r_grid;
    std::vector<double> bws{std::numeric_limits<double>::quiet_NaN()};
    if (is_kernel_method(m))
        bws = plan.bandwidth_grid.empty() ? default_bandwidth_grid(train.X)
                                          : plan.bandwidth_grid;
    std::vector<Cell> cells;
    for (int r : rs) {
        for (double bw : bws) {
            if (is_spca_method(m) && plan.mode == Mode::cv) {
                std::vector<double> lambdas = plan.lambda_grid;
                if (lambdas.empty()) {
                    if (is_kernel_method(m)) {
                        const CenteredKernel ck =
                            build_centered_kernel(train.X, KernelSpec{KernelKind::rbf, bw});
                        lambdas = default_lambda_grid(kernel_dataset(train, ck));
                    } else {
                        lambdas = default_lambda_grid(train);
                    }
                }
                for (double l : lambdas) cells.push_back(Cell{r, bw, l});
            } else {
                cells.push_back(Cell{r, bw, std::numeric_limits<double>::quiet_NaN()});
            }
        }
    }
    return cells;
}

FitSpec cell_spec(HarnessMethod m, const ExperimentPlan& plan, const Cell& c) {
    FitSpec spec;
    spec.method = m;
    spec.mode = plan.mode;
    spec.algorithm = plan.algorithm;
    spec.r = c.r;
    spec.lambda = std::isnan(c.lambda) ? 1.0 : c.lambda;
    spec.bandwidth = c.bandwidth;
    spec.lr_reg = plan.lr_reg;
    return spec;
}

} // namespace

ExperimentResult run_experiment(const RawData& raw, const ExperimentPlan& plan) {
    for (HarnessMethod m : plan.methods)
        if (method_task(m) != raw.task)
            throw std::invalid_argument("method " + method_name(m) +
                                        " does not match the dataset task");
    if (plan.methods.empty()) throw std::invalid_argument("no methods in plan");

    const int n = static_cast<int>(raw.X.rows());
    const int width = resolve_threads(plan.threads);
    ExperimentResult out;

    for (int repeat = 0; repeat < plan.split.n_repeats; ++repeat) {
        const Split sp = make_split(n, plan.split, repeat);
        const Dataset train_data = center_rows(raw, sp.train, plan.standardize);
        const Eigen::MatrixXd rawX_train = take_rows(raw.X, sp.train);
        const Eigen::MatrixXd rawY_train = take_rows(raw.Y, sp.train);
        const Eigen::MatrixXd rawX_test = take_rows(raw.X, sp.test);
        const Eigen::MatrixXd rawY_test = take_rows(raw.Y, sp.test);

        // per-fold training sets, shared read-only across the grid
        const int n_folds = static_cast<int>(sp.folds.size());
        std::vector<Dataset> fold_train(static_cast<std::size_t>(n_folds));
        std::vector<Eigen::MatrixXd> fold_X(static_cast<std::size_t>(n_folds));
        std::vector<Eigen::MatrixXd> fold_Y(static_cast<std::size_t>(n_folds));
        for (int f = 0; f < n_folds; ++f) {
            std::vector<int> rest;
            std::set_difference(sp.train.begin(), sp.train.end(), sp.folds[f].begin(),
                                sp.folds[f].end(), std::back_inserter(rest));
            fold_train[static_cast<std::size_t>(f)] = center_rows(raw, rest, plan.standardize);
            fold_X[static_cast<std::size_t>(f)] = take_rows(raw.X, sp.folds[f]);
            fold_Y[static_cast<std::size_t>(f)] = take_rows(raw.Y, sp.folds[f]);
        }

        for (std::size_t mi = 0; mi < plan.methods.size(); ++mi) {
            const HarnessMethod m = plan.methods[mi];
            const auto t_start = std::chrono::steady_clock::now();
            EvalRecord rec;
            rec.method = method_name(m);
            rec.mode = plan.mode == Mode::cv ? "cv" : "mle";
            rec.repeat = repeat;
            rec.seed = derive_seed(plan.split.seed, {static_cast<std::uint64_t>(repeat), mi});

            const std::vector<Cell> cells = build_grid(raw, train_data, m, plan);
            rec.cv_cells = static_cast<int>(cells.size());
            Cell chosen = cells.front();

            if (cells.size() > 1) {
                const int n_tasks = static_cast<int>(cells.size()) * n_folds;
                std::vector<double> errs(static_cast<std::size_t>(n_tasks),
                                         std::numeric_limits<double>::quiet_NaN());
                parallel_for(n_tasks, width, [&](int t) {
                    const int ci = t / n_folds;
                    const int f = t % n_folds;
                    try {
                        const FittedModel fm =
                            fit_model(fold_train[static_cast<std::size_t>(f)],
                                      cell_spec(m, plan, cells[static_cast<std::size_t>(ci)]));
                        errs[static_cast<std::size_t>(t)] = prediction_error(
                            fm.predict(fold_X[static_cast<std::size_t>(f)]),
                            fold_Y[static_cast<std::size_t>(f)], raw.task);
                    } catch (const std::exception&) {
                        // leave NaN; counted below
                    }
                });
                double best_err = std::numeric_limits<double>::infinity();
                bool have_best = false;
                for (std::size_t ci = 0; ci < cells.size(); ++ci) {
                    double sum = 0;
                    bool ok = true;
                    for (int f = 0; f < n_folds; ++f) {
                        const double e = errs[ci * static_cast<std::size_t>(n_folds) +
                                              static_cast<std::size_t>(f)];
                        if (std::isnan(e)) {
                            ok = false;
                            ++rec.cv_failures;
                        } else {
                            sum += e;
                        }
                    }
                    if (!ok) continue;
                    const double mean_err = sum / n_folds;
                    if (!have_best || mean_err < best_err ||
                        (mean_err == best_err && cell_key_less(cells[ci], chosen))) {
                        best_err = mean_err;
                        chosen = cells[ci];
                        have_best = true;
                    }
                }
                if (!have_best) {
                    rec.failed = true;
                    rec.error = "all CV cells failed";
                }
            }

            if (!rec.failed) {
                try {
                    const FittedModel fm = fit_model(train_data, cell_spec(m, plan, chosen));
                    rec.r = chosen.r;
                    rec.lambda = is_spca_method(m)
                                     ? (plan.mode == Mode::mle ? fm.params.lambda : chosen.lambda)
                                     : std::numeric_limits<double>::quiet_NaN();
                    if (is_kernel_method(m)) rec.bandwidth = chosen.bandwidth;
                    rec.train_error =
                        prediction_error(fm.predict(rawX_train), rawY_train, raw.task);
                    rec.test_error = prediction_error(fm.predict(rawX_test), rawY_test, raw.task);
                    rec.variation_explained = fm.variation_explained;
                } catch (const std::exception& e) {
                    rec.failed = true;
                    rec.error = e.what();
                }
            }
            rec.wall_time_sec = std::chrono::duration<double>(
                std::chrono::steady_clock::now() - t_start).count();
            out.records.push_back(std::move(rec));
        }
    }

    // aggregate per method, preserving plan order
    for (HarnessMethod m : plan.methods) {
        MethodSummary s;
        s.method = method_name(m);
        std::vector<double> errors;
        double ve_sum = 0;
        for (const EvalRecord& r : out.records) {
            if (r.method != s.method) continue;
            if (r.failed) {
                ++s.n_failed;
            } else {
                errors.push_back(r.test_error);
                ve_sum += r.variation_explained;
            }
        }
        s.n_ok = static_cast<int>(errors.size());
        if (s.n_ok > 0) {
            double sum = 0;
            for (double e : errors) sum += e;
            s.mean_error = sum / s.n_ok;
            s.mean_ve = ve_sum / s.n_ok;
            if (s.n_ok > 1) {
                double ss = 0;
                for (double e : errors) ss += (e - s.mean_error) * (e - s.mean_error);
                s.stddev = std::sqrt(ss / (s.n_ok - 1));
                s.stderr_mean = s.stddev / std::sqrt(static_cast<double>(s.n_ok));
            }
        }
        out.summary.push_back(std::move(s));
    }
    return out;
}

ParetoCurve pareto_sweep(const RawData& raw, HarnessMethod method, int r,
                         std::vector<double> lambda_grid, const ExperimentPlan& plan) {
    if (method_task(method) != raw.task)
        throw std::invalid_argument("method does not match the dataset task");
    if (!is_spca_method(method))
        throw std::invalid_argument("pareto sweep needs a lambda-parameterized method");

    const int n = static_cast<int>(raw.X.rows());
    const Split sp = make_split(n, plan.split, 0);
    const Dataset train_data = center_rows(raw, sp.train, plan.standardize);
    const Eigen::MatrixXd rawX_train = take_rows(raw.X, sp.train);
    const Eigen::MatrixXd rawY_train = take_rows(raw.Y, sp.train);
    const Eigen::MatrixXd rawX_test = take_rows(raw.X, sp.test);
    const Eigen::MatrixXd rawY_test = take_rows(raw.Y, sp.test);

    double bandwidth = std::numeric_limits<double>::quiet_NaN();
    std::optional<CenteredKernel> ck;
    if (is_kernel_method(method)) {
        bandwidth = plan.bandwidth_grid.empty() ? median_bandwidth(train_data.X)
                                                : plan.bandwidth_grid.front();
        ck = build_centered_kernel(train_data.X, KernelSpec{KernelKind::rbf, bandwidth});
    }
    if (lambda_grid.empty())
        lambda_grid = ck ? default_lambda_grid(kernel_dataset(train_data, *ck))
                         : default_lambda_grid(train_data);

    ParetoCurve curve;
    curve.method = method_name(method);
    curve.r = r;
    curve.points.resize(lambda_grid.size());

    auto evaluate = [&](const FittedModel& fm, double lambda) {
        ParetoPoint pt;
        pt.lambda = lambda;
        pt.ve_train = fm.variation_explained;
        pt.err_train = prediction_error(fm.predict(rawX_train), rawY_train, raw.task);
        pt.err_test = prediction_error(fm.predict(rawX_test), rawY_test, raw.task);
        pt.ve_test = fm.kernel ? std::numeric_limits<double>::quiet_NaN()
                               : variation_explained(
                                     apply_centering(fm.centering, rawX_test), fm.params.L);
        return pt;
    };

    parallel_for(static_cast<int>(lambda_grid.size()), resolve_threads(plan.threads),
                 [&](int i) {
                     FitSpec spec;
                     spec.method = method;
                     spec.mode = Mode::cv;
                     spec.algorithm = plan.algorithm;
                     spec.r = r;
                     spec.lambda = lambda_grid[static_cast<std::size_t>(i)];
                     spec.bandwidth = bandwidth;
                     spec.lr_reg = plan.lr_reg;
                     const FittedModel fm = fit_model(train_data, spec);
                     curve.points[static_cast<std::size_t>(i)] =
                         evaluate(fm, spec.lambda);
                 });

    // fixed-subspace endpoint
    {
        FitSpec spec;
        spec.method = ck ? (raw.task == Task::regression ? HarnessMethod::kpcr
                                                         : HarnessMethod::kpcc)
                         : (raw.task == Task::regression ? HarnessMethod::pcr
                                                         : HarnessMethod::pcc);
        spec.r = r;
        spec.bandwidth = bandwidth;
        spec.lr_reg = plan.lr_reg;
        const FittedModel fm = fit_model(train_data, spec);
        const ParetoPoint pt = evaluate(fm, 0.0);
        curve.references.push_back(
            {method_name(spec.method), pt.ve_train, pt.err_train, pt.err_test});
    }
    if (raw.task == Task::regression) {
        const Dataset fit_view = ck ? kernel_dataset(train_data, *ck) : train_data;
        // rank capped by the response width; beyond it rrr is just ols
        const int r_rrr = std::min<int>({r, static_cast<int>(fit_view.q()),
                                         static_cast<int>(fit_view.p())});
        const RrrResult rr = rrr(fit_view.X, fit_view.Y, r_rrr);
        FittedModel fm;
        fm.method = method;
        fm.task = raw.task;
        fm.centering = train_data.centering();
        fm.params.L = rr.L;
        fm.params.beta = rr.beta;
        fm.kernel = ck;
        fm.variation_explained = variation_explained(fit_view.X, rr.L);
        const ParetoPoint pt = evaluate(fm, 0.0);
        curve.references.push_back({"rrr", pt.ve_train, pt.err_train, pt.err_test});
    }
    return curve;
}

} // namespace spca
