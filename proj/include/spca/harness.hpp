#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spca/csv.hpp"
#include "spca/kernel.hpp"
#include "spca/solvers.hpp"

namespace spca {

enum class HarnessMethod { lspca, lrpca, klspca, klrpca, pcr, pcc, kpcr, kpcc };

bool is_kernel_method(HarnessMethod m);
bool is_spca_method(HarnessMethod m);  // carries a lambda trade-off parameter
Task method_task(HarnessMethod m);
std::string method_name(HarnessMethod m);
HarnessMethod parse_method(const std::string& name);

/// A fitted model plus everything needed to score new raw rows.
struct FittedModel {
    HarnessMethod method = HarnessMethod::pcr;
    Mode mode = Mode::cv;
    Task task = Task::regression;
    Centering centering;
    ModelParams params;
    std::optional<CenteredKernel> kernel;
    std::vector<std::string> class_names;
    double train_nll = 0;
    double variation_explained = 0;

    Method model_method() const {
        return task == Task::regression ? Method::lspca : Method::lrpca;
    }
    /// Embedding of new raw rows (X L after centering, or the kernel projection).
    Eigen::MatrixXd embed(const Eigen::MatrixXd& raw_rows) const;
    Prediction predict(const Eigen::MatrixXd& raw_rows) const;
};

/// One grid cell of the experiment: hyperparameters for a single fit.
struct FitSpec {
    HarnessMethod method = HarnessMethod::pcr;
    Mode mode = Mode::cv;
    Algorithm algorithm = Algorithm::alternating;
    int r = 2;
    double lambda = 1.0;  // spca methods in cv mode
    KernelKind kernel_kind = KernelKind::rbf;
    // kernel methods; NaN or nonpositive selects the median distance heuristic
    double bandwidth = std::numeric_limits<double>::quiet_NaN();
    double lr_reg = 0.0;
    FitConfig tuning;  // tolerances and mcgd options (method fields ignored)
};

/// Fits one method on centered training data. On logistic divergence the fit
/// is retried once with a small ridge, as the solver's diagnostic instructs.
FittedModel fit_model(const Dataset& train, const FitSpec& spec);

/// Prediction error: mean squared error over all entries (regression) or the
/// misclassification rate (classification, label columns).
double metrics(const Eigen::MatrixXd& yhat, const Eigen::MatrixXd& y_true, Task task);

/// Error of a Prediction against raw responses (uncentered values for
/// regression, class indices for classification).
double prediction_error(const Prediction& pred, const Eigen::MatrixXd& y_raw, Task task);

/// 20 log-spaced lambdas centered where the loss and PCA terms balance.
std::vector<double> default_lambda_grid(const Dataset& train, int count = 20);

/// median distance x {1/4, 1/2, 1, 2, 4}.
std::vector<double> default_bandwidth_grid(const Eigen::MatrixXd& centered_rows);

struct ExperimentPlan {
    std::vector<HarnessMethod> methods;
    Mode mode = Mode::cv;
    Algorithm algorithm = Algorithm::alternating;
    int r = 2;
    std::vector<int> r_grid;             // nonempty: select r by CV
    std::vector<double> lambda_grid;     // empty: per-dataset default
    std::vector<double> bandwidth_grid;  // empty: median heuristic grid
    SplitPlan split;
    double lr_reg = 0.0;
    bool standardize = false;
    int threads = 0;  // 0: SPCA_THREADS env or hardware concurrency
};

struct EvalRecord {
    std::string method;
    std::string mode;
    int r = 0;
    double lambda = 0;                  // NaN when not applicable
    std::optional<double> bandwidth;
    int repeat = 0;
    double test_error = 0;
    double train_error = 0;
    double variation_explained = 0;
    double wall_time_sec = 0;           // informational; not part of emitted records
    std::uint64_t seed = 0;
    int cv_cells = 0;
    int cv_failures = 0;
    bool failed = false;
    std::string error;
};

struct MethodSummary {
    std::string method;
    int n_ok = 0;
    int n_failed = 0;
    double mean_error = 0;
    double stddev = 0;       // sample standard deviation over repeats
    double stderr_mean = 0;  // stddev / sqrt(n_ok)
    double mean_ve = 0;
};

struct ExperimentResult {
    std::vector<EvalRecord> records;
    std::vector<MethodSummary> summary;
};

/// The full protocol: per repeat, hold out a test fraction, select
/// hyperparameters by k-fold CV on the training part (ties to the smallest
/// lambda, then bandwidth, then r), refit on the whole training part, and
/// evaluate on the held-out rows. Failures are recorded, counted, and
/// excluded from the aggregates.
ExperimentResult run_experiment(const RawData& raw, const ExperimentPlan& plan);

struct ParetoPoint {
    double lambda = 0;
    double ve_train = 0;
    double err_train = 0;
    double ve_test = 0;  // NaN for kernel methods
    double err_test = 0;
};

struct ParetoReference {
    std::string name;
    double ve_train = 0;
    double err_train = 0;
    double err_test = 0;
};

struct ParetoCurve {
    std::string method;
    int r = 0;
    std::vector<ParetoPoint> points;          // one per lambda, grid order
    std::vector<ParetoReference> references;  // PCR/PCC endpoint; RRR for regression
};

/// Trade-off curve at fixed r: one cv-mode fit per lambda on a single
/// train/test split, with the fixed-subspace baseline (and RRR endpoint for
/// regression) attached for reference.
ParetoCurve pareto_sweep(const RawData& raw, HarnessMethod method, int r,
                         std::vector<double> lambda_grid, const ExperimentPlan& plan);

} // namespace spca
