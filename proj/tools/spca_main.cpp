#include <CLI11.hpp>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "spca/artifact.hpp"
#include "spca/errors.hpp"
#include "spca/harness.hpp"

namespace {

using namespace spca;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) {
        while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front())))
            item.erase(item.begin());
        while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back())))
            item.pop_back();
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

Task parse_task(const std::string& s) {
    if (s == "reg" || s == "regression") return Task::regression;
    if (s == "class" || s == "classification") return Task::classification;
    throw DataError("unknown task: " + s);
}

Mode parse_mode(const std::string& s) {
    if (s == "cv") return Mode::cv;
    if (s == "mle") return Mode::mle;
    throw DataError("unknown mode: " + s);
}

Algorithm parse_algorithm(const std::string& s) {
    if (s == "alt" || s == "alternating") return Algorithm::alternating;
    if (s == "sub" || s == "substitution") return Algorithm::substitution;
    throw DataError("unknown algorithm: " + s);
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
    std::string data, response_col, out;
    std::string task = "reg", method = "lspca", mode = "cv", algorithm = "alt";
    std::string kernel = "rbf";
    int r = 2;
    double lambda = 1.0;
    double bandwidth = 0.0;
    std::uint64_t seed = 0;
    bool standardize = false;
};

int cmd_fit(const FitArgs& a) {
    const Task task = parse_task(a.task);
    const RawData raw = load_csv(a.data, a.response_col, task);
    CenterOptions copts;
    copts.standardize = a.standardize;
    copts.n_classes = raw.n_classes;
    const Dataset data = center(raw.X, raw.Y, task, copts);

    FitSpec spec;
    spec.method = parse_method(a.method);
    if (method_task(spec.method) != task)
        throw DataError("method " + a.method + " does not match task " + a.task);
    spec.mode = parse_mode(a.mode);
    spec.algorithm = parse_algorithm(a.algorithm);
    spec.r = a.r;
    spec.lambda = a.lambda;
    spec.kernel_kind = a.kernel == "linear" ? KernelKind::linear : KernelKind::rbf;
    spec.bandwidth = a.bandwidth;
    spec.tuning.seed = a.seed;

    FittedModel model = fit_model(data, spec);
    model.class_names = raw.class_names;

    const double train_error =
        prediction_error(model.predict(raw.X), raw.Y, task);
    std::cout << "method " << method_name(model.method) << "\n"
              << "nll " << fmt(model.train_nll) << "\n"
              << "variation_explained " << fmt(model.variation_explained) << "\n"
              << "train_error " << fmt(train_error) << "\n"
              << "lambda " << fmt(model.params.lambda) << "\n"
              << "gamma " << fmt(model.params.gamma) << "\n";
    if (model.params.sigma_x2) std::cout << "sigma_x2 " << fmt(*model.params.sigma_x2) << "\n";
    if (model.params.alpha) std::cout << "alpha " << fmt(*model.params.alpha) << "\n";
    if (model.params.sigma_y2) std::cout << "sigma_y2 " << fmt(*model.params.sigma_y2) << "\n";

    if (!a.out.empty()) {
        save_model(a.out, model);
        std::cout << "saved " << a.out << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
    std::string model, data, out;
    std::string response_col;  // dropped from the data file if present
};

int cmd_predict(const PredictArgs& a) {
    const FittedModel model = load_model(a.model);
    const Eigen::MatrixXd X = load_matrix_csv(a.data, a.response_col);
    if (X.cols() != model.centering.x_mean.size())
        throw DataError("feature count mismatch: file has " + std::to_string(X.cols()) +
                        ", model expects " + std::to_string(model.centering.x_mean.size()));

    std::vector<std::string> header;
    Eigen::MatrixXd values;
    if (model.task == Task::regression) {
        Prediction pred = X.rows() ? model.predict(X) : Prediction{};
        const Eigen::Index q = model.params.beta.cols();
        for (Eigen::Index j = 0; j < q; ++j) header.push_back("yhat" + std::to_string(j));
        values = X.rows() ? pred.values : Eigen::MatrixXd(0, q);
    } else {
        const Eigen::Index q = model.params.beta.cols();
        for (Eigen::Index j = 0; j < q; ++j) {
            const std::string cls = j < static_cast<Eigen::Index>(model.class_names.size())
                                        ? model.class_names[static_cast<std::size_t>(j)]
                                        : std::to_string(j);
            header.push_back("p_" + cls);
        }
        header.push_back("label");
        values.resize(X.rows(), q + 1);
        if (X.rows()) {
            Prediction pred = model.predict(X);
            values.leftCols(q) = pred.values;
            for (Eigen::Index i = 0; i < X.rows(); ++i)
                values(i, q) = pred.labels[static_cast<std::size_t>(i)];
        }
    }
    write_csv(a.out, header, values);
    return 0;
}

// ---------------------------------------------------------------------------
// experiment

std::map<std::string, std::string> read_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open plan file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
                s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
                s.pop_back();
            return s;
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

std::vector<double> parse_grid(const std::string& s) {
    if (s.empty() || s == "auto") return {};
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(std::stod(item));
    return out;
}

std::string record_json(const EvalRecord& r) {
    std::ostringstream o;
    o << "{\"method\":\"" << r.method << "\",\"mode\":\"" << r.mode << "\""
      << ",\"r\":" << r.r << ",\"lambda\":"
      << (std::isnan(r.lambda) ? std::string("null") : fmt(r.lambda));
    o << ",\"bandwidth\":" << (r.bandwidth ? fmt(*r.bandwidth) : std::string("null"));
    o << ",\"repeat\":" << r.repeat;
    if (r.failed) {
        o << ",\"failed\":true,\"error\":\"" << json_escape(r.error) << "\"";
    } else {
        o << ",\"test_error\":" << fmt(r.test_error)
          << ",\"train_error\":" << fmt(r.train_error)
          << ",\"variation_explained\":" << fmt(r.variation_explained);
    }
    o << ",\"seed\":" << r.seed << ",\"cv_cells\":" << r.cv_cells
      << ",\"cv_failures\":" << r.cv_failures << "}";
    return o.str();
}

std::string summary_table(const ExperimentResult& res) {
    std::ostringstream o;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-10s %5s %7s %12s %12s %12s %10s\n", "method", "ok",
                  "failed", "mean_error", "stddev", "stderr", "mean_ve");
    o << buf;
    for (const auto& s : res.summary) {
        std::snprintf(buf, sizeof(buf), "%-10s %5d %7d %12.6g %12.6g %12.6g %10.4f\n",
                      s.method.c_str(), s.n_ok, s.n_failed, s.mean_error, s.stddev,
                      s.stderr_mean, s.mean_ve);
        o << buf;
    }
    return o.str();
}

int cmd_experiment(const std::string& plan_path) {
    const auto kv = read_plan(plan_path);
    auto get = [&](const std::string& key, const std::string& fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    };
    auto require = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw DataError("plan is missing required key: " + key);
        return it->second;
    };

    const Task task = parse_task(get("task", "reg"));
    const RawData raw = load_csv(require("data"), require("response_col"), task);
    const std::string prefix = require("out_prefix");

    ExperimentPlan plan;
    for (const auto& name : split_list(get("methods", "")))
        plan.methods.push_back(parse_method(name));
    plan.mode = parse_mode(get("mode", "cv"));
    plan.algorithm = parse_algorithm(get("algorithm", "alt"));
    plan.r = std::stoi(get("r", "2"));
    for (const auto& item : split_list(get("r_grid", "")))
        plan.r_grid.push_back(std::stoi(item));
    plan.lambda_grid = parse_grid(get("lambda_grid", "auto"));
    plan.bandwidth_grid = parse_grid(get("bandwidth_grid", "auto"));
    plan.split.seed = std::stoull(get("seed", "0"));
    plan.split.test_fraction = std::stod(get("test_fraction", "0.2"));
    plan.split.n_folds = std::stoi(get("n_folds", "10"));
    plan.split.n_repeats = std::stoi(get("n_repeats", "10"));
    plan.lr_reg = std::stod(get("lr_reg", "0"));
    plan.standardize = get("standardize", "0") == "1";
    plan.threads = std::stoi(get("threads", "0"));

    if (!plan.methods.empty()) {
        const ExperimentResult res = run_experiment(raw, plan);
        std::ostringstream records;
        for (const auto& r : res.records) records << record_json(r) << "\n";
        write_file_atomic(prefix + "_records.jsonl", records.str());
        const std::string table = summary_table(res);
        write_file_atomic(prefix + "_summary.txt", table);
        std::cout << table;
        int failed_cells = 0;
        for (const auto& r : res.records) failed_cells += r.cv_failures + (r.failed ? 1 : 0);
        if (failed_cells > 0)
            std::cout << "note: " << failed_cells
                      << " failed fits recorded (see records file)\n";
    }

    const std::string pareto_method = get("pareto_method", "");
    if (!pareto_method.empty()) {
        const int pr = std::stoi(get("pareto_r", get("r", "2")));
        const ParetoCurve curve =
            pareto_sweep(raw, parse_method(pareto_method), pr,
                         parse_grid(get("pareto_lambda_grid", "auto")), plan);
        std::ostringstream o;
        o << "method,set,lambda,ve,error\n";
        for (const auto& pt : curve.points) {
            o << curve.method << ",train," << fmt(pt.lambda) << ',' << fmt(pt.ve_train) << ','
              << fmt(pt.err_train) << "\n";
            o << curve.method << ",test," << fmt(pt.lambda) << ',' << fmt(pt.ve_test) << ','
              << fmt(pt.err_test) << "\n";
        }
        for (const auto& ref : curve.references) {
            o << ref.name << ",train,," << fmt(ref.ve_train) << ',' << fmt(ref.err_train)
              << "\n";
            o << ref.name << ",test,," << fmt(ref.ve_train) << ',' << fmt(ref.err_test) << "\n";
        }
        write_file_atomic(prefix + "_pareto.csv", o.str());
        std::cout << "pareto sweep: " << curve.points.size() << " lambdas written to "
                  << prefix + "_pareto.csv" << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"supervised dimensionality reduction toolkit"};
    app.require_subcommand(1);

    FitArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model and save an artifact");
    fit_cmd->add_option("--data", fit_args.data, "CSV data file")->required();
    fit_cmd->add_option("--response-col", fit_args.response_col, "response column (name or index)")
        ->required();
    fit_cmd->add_option("--task", fit_args.task, "reg | class");
    fit_cmd->add_option("--method", fit_args.method,
                        "lspca | lrpca | klspca | klrpca | pcr | pcc | kpcr | kpcc");
    fit_cmd->add_option("--mode", fit_args.mode, "cv | mle");
    fit_cmd->add_option("--algorithm", fit_args.algorithm, "alt | sub");
    fit_cmd->add_option("--r", fit_args.r, "subspace dimension");
    fit_cmd->add_option("--lambda", fit_args.lambda, "trade-off weight (cv mode)");
    fit_cmd->add_option("--kernel", fit_args.kernel, "linear | rbf");
    fit_cmd->add_option("--bandwidth", fit_args.bandwidth,
                        "rbf bandwidth (0 = median heuristic)");
    fit_cmd->add_option("--seed", fit_args.seed, "seed recorded with the fit");
    fit_cmd->add_flag("--standardize", fit_args.standardize, "scale features to unit variance");
    fit_cmd->add_option("--out", fit_args.out, "artifact output path");

    PredictArgs predict_args;
    CLI::App* predict_cmd = app.add_subcommand("predict", "apply a saved model to new data");
    predict_cmd->add_option("--model", predict_args.model, "model artifact")->required();
    predict_cmd->add_option("--data", predict_args.data, "CSV feature file")->required();
    predict_cmd->add_option("--response-col", predict_args.response_col,
                            "column to drop if the file still carries the response");
    predict_cmd->add_option("--out", predict_args.out, "predictions CSV")->required();

    std::string plan_path;
    CLI::App* exp_cmd = app.add_subcommand("experiment", "run a plan file");
    exp_cmd->add_option("--plan", plan_path, "flat key=value plan file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(fit_args);
        if (predict_cmd->parsed()) return cmd_predict(predict_args);
        if (exp_cmd->parsed()) return cmd_experiment(plan_path);
    } catch (const spca::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const spca::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
