#include "spca/artifact.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "spca/errors.hpp"

namespace spca {

namespace {

constexpr const char* kMagic = "spca-model";
constexpr int kVersion = 1;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
    out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            out << fmt(m(i, j));
        }
        out << '\n';
    }
}

void write_vector(std::ostream& out, const std::string& name, const Eigen::VectorXd& v) {
    out << "vector " << name << ' ' << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out << ' ';
        out << fmt(v(i));
    }
    out << '\n';
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string word() {
        std::string w;
        if (!(in_ >> w)) throw DataError("model artifact truncated");
        return w;
    }
    double number() {
        double v;
        if (!(in_ >> v)) throw DataError("model artifact: expected a number");
        return v;
    }
    Eigen::Index index() {
        long long v;
        if (!(in_ >> v) || v < 0) throw DataError("model artifact: expected a size");
        return static_cast<Eigen::Index>(v);
    }
    Eigen::MatrixXd matrix() {
        const Eigen::Index rows = index(), cols = index();
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = number();
        return m;
    }
    Eigen::VectorXd vector() {
        const Eigen::Index n = index();
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = number();
        return v;
    }
    bool next(std::string& w) { return static_cast<bool>(in_ >> w); }

private:
    std::istream& in_;
};

} // namespace

void save_model(const std::string& path, const FittedModel& model) {
    std::ostringstream out;
    out << kMagic << " v" << kVersion << '\n';
    out << "method " << method_name(model.method) << '\n';
    out << "task " << (model.task == Task::regression ? "reg" : "class") << '\n';
    out << "mode " << (model.mode == Mode::cv ? "cv" : "mle") << '\n';
    out << "lambda " << fmt(model.params.lambda) << '\n';
    out << "gamma " << fmt(model.params.gamma) << '\n';
    if (model.params.sigma_x2) out << "sigma_x2 " << fmt(*model.params.sigma_x2) << '\n';
    if (model.params.alpha) out << "alpha " << fmt(*model.params.alpha) << '\n';
    if (model.params.sigma_y2) out << "sigma_y2 " << fmt(*model.params.sigma_y2) << '\n';
    out << "train_nll " << fmt(model.train_nll) << '\n';
    out << "variation_explained " << fmt(model.variation_explained) << '\n';
    if (!model.class_names.empty()) {
        out << "classes " << model.class_names.size();
        for (const auto& c : model.class_names) out << ' ' << c;
        out << '\n';
    }
    write_vector(out, "x_mean", model.centering.x_mean);
    write_vector(out, "x_scale", model.centering.x_scale);
    if (model.centering.y_mean.size()) write_vector(out, "y_mean", model.centering.y_mean);
    write_matrix(out, "L", model.params.L);
    write_matrix(out, "beta", model.params.beta);
    if (model.kernel) {
        out << "kernel " << (model.kernel->spec.kind == KernelKind::rbf ? "rbf" : "linear")
            << '\n';
        out << "bandwidth " << fmt(model.kernel->spec.bandwidth) << '\n';
        out << "k_grand_mean " << fmt(model.kernel->grand_mean) << '\n';
        write_vector(out, "k_row_mean", model.kernel->row_mean);
        write_matrix(out, "train_rows", model.kernel->train_rows);
    }
    out << "end\n";
    write_file_atomic(path, out.str());
}

FittedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model artifact: " + path);
    Reader r(in);

    if (r.word() != kMagic) throw DataError("not a model artifact: " + path);
    const std::string version = r.word();
    if (version != "v" + std::to_string(kVersion))
        throw DataError("unsupported artifact schema version: " + version);

    FittedModel m;
    bool has_kernel = false;
    KernelSpec kspec;
    Eigen::VectorXd k_row_mean;
    double k_grand_mean = 0;
    Eigen::MatrixXd train_rows;

    std::string key;
    while (r.next(key)) {
        if (key == "end") break;
        if (key == "method") m.method = parse_method(r.word());
        else if (key == "task") m.task = r.word() == "class" ? Task::classification
                                                             : Task::regression;
        else if (key == "mode") m.mode = r.word() == "mle" ? Mode::mle : Mode::cv;
        else if (key == "lambda") m.params.lambda = r.number();
        else if (key == "gamma") m.params.gamma = r.number();
        else if (key == "sigma_x2") m.params.sigma_x2 = r.number();
        else if (key == "alpha") m.params.alpha = r.number();
        else if (key == "sigma_y2") m.params.sigma_y2 = r.number();
        else if (key == "train_nll") m.train_nll = r.number();
        else if (key == "variation_explained") m.variation_explained = r.number();
        else if (key == "classes") {
            const Eigen::Index k = r.index();
            for (Eigen::Index i = 0; i < k; ++i) m.class_names.push_back(r.word());
        } else if (key == "vector") {
            const std::string name = r.word();
            Eigen::VectorXd v = r.vector();
            if (name == "x_mean") m.centering.x_mean = std::move(v);
            else if (name == "x_scale") m.centering.x_scale = std::move(v);
            else if (name == "y_mean") m.centering.y_mean = std::move(v);
            else if (name == "k_row_mean") k_row_mean = std::move(v);
            else throw DataError("unknown vector field: " + name);
        } else if (key == "matrix") {
            const std::string name = r.word();
            Eigen::MatrixXd v = r.matrix();
            if (name == "L") m.params.L = std::move(v);
            else if (name == "beta") m.params.beta = std::move(v);
            else if (name == "train_rows") train_rows = std::move(v);
            else throw DataError("unknown matrix field: " + name);
        } else if (key == "kernel") {
            has_kernel = true;
            kspec.kind = r.word() == "rbf" ? KernelKind::rbf : KernelKind::linear;
        } else if (key == "bandwidth") {
            kspec.bandwidth = r.number();
        } else if (key == "k_grand_mean") {
            k_grand_mean = r.number();
        } else {
            throw DataError("unknown artifact field: " + key);
        }
    }
    if (key != "end") throw DataError("model artifact missing end marker");
    if (m.params.L.size() == 0 || m.params.beta.size() == 0)
        throw DataError("model artifact missing parameter blocks");

    if (has_kernel) {
        CenteredKernel ck;
        ck.spec = kspec;
        ck.row_mean = std::move(k_row_mean);
        ck.grand_mean = k_grand_mean;
        ck.train_rows = std::move(train_rows);
        m.kernel = std::move(ck);
    }
    return m;
}

} // namespace spca
