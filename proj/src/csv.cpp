#include "spca/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "spca/errors.hpp"

namespace spca {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

bool is_missing(const std::string& s) {
    if (s.empty()) return true;
    std::string lower = s;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return lower == "na" || lower == "nan" || lower == "?";
}

} // namespace

RawData load_csv(const std::string& path, const std::string& response_col, Task task) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path);

    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        rows.push_back(split_line(line));
    }
    if (rows.empty()) throw DataError("empty data file: " + path);

    const std::size_t ncols = rows[0].size();
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].size() != ncols)
            throw DataError("row " + std::to_string(i + 1) + " has " +
                            std::to_string(rows[i].size()) + " fields, expected " +
                            std::to_string(ncols));
    if (ncols < 2) throw DataError("need at least one predictor and one response column");

    // header row: any non-numeric first-row cell that is not a missing marker
    bool has_header = false;
    for (const auto& cell : rows[0]) {
        double v;
        if (!is_missing(cell) && !parse_double(cell, v)) {
            has_header = true;
            break;
        }
    }
    std::vector<std::string> names(ncols);
    if (has_header) {
        names = rows[0];
        rows.erase(rows.begin());
        if (rows.empty()) throw DataError("no data rows after header");
    } else {
        for (std::size_t j = 0; j < ncols; ++j) names[j] = "c" + std::to_string(j);
    }

    // resolve response column by name, then by index
    std::size_t resp = ncols;
    for (std::size_t j = 0; j < ncols; ++j)
        if (names[j] == response_col) resp = j;
    if (resp == ncols) {
        double v;
        if (parse_double(response_col, v) && v >= 0 && v < static_cast<double>(ncols) &&
            v == std::floor(v))
            resp = static_cast<std::size_t>(v);
    }
    if (resp == ncols)
        throw DataError("response column '" + response_col + "' not found");

    const std::size_t n = rows.size();
    RawData d;
    d.task = task;
    d.response_name = names[resp];
    d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ncols - 1));
    d.Y.resize(static_cast<Eigen::Index>(n), 1);
    for (std::size_t j = 0; j < ncols; ++j)
        if (j != resp) d.feature_names.push_back(names[j]);

    std::vector<std::string> raw_labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index jj = 0;
        for (std::size_t j = 0; j < ncols; ++j) {
            const std::string& cell = rows[i][j];
            const std::string where = "row " + std::to_string(i + (has_header ? 2 : 1)) +
                                      ", column '" + names[j] + "'";
            if (is_missing(cell)) throw DataError("missing value at " + where);
            if (j == resp) {
                raw_labels[i] = cell;
                continue;
            }
            double v;
            if (!parse_double(cell, v)) throw DataError("non-numeric value at " + where);
            d.X(static_cast<Eigen::Index>(i), jj++) = v;
        }
    }

    if (task == Task::regression) {
        for (std::size_t i = 0; i < n; ++i) {
            double v;
            if (!parse_double(raw_labels[i], v))
                throw DataError("non-numeric response in row " + std::to_string(i + 1));
            d.Y(static_cast<Eigen::Index>(i), 0) = v;
        }
    } else {
        std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
        std::map<std::string, int> index;
        for (const auto& s : distinct) {
            index[s] = static_cast<int>(d.class_names.size());
            d.class_names.push_back(s);
        }
        d.n_classes = static_cast<int>(d.class_names.size());
        if (d.n_classes < 2) throw DataError("classification needs at least two classes");
        for (std::size_t i = 0; i < n; ++i)
            d.Y(static_cast<Eigen::Index>(i), 0) = index.at(raw_labels[i]);
    }
    return d;
}

Eigen::MatrixXd load_matrix_csv(const std::string& path, const std::string& drop_col) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path);

    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        rows.push_back(split_line(line));
    }
    if (rows.empty()) throw DataError("empty data file: " + path);

    const std::size_t ncols = rows[0].size();
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].size() != ncols)
            throw DataError("row " + std::to_string(i + 1) + " has " +
                            std::to_string(rows[i].size()) + " fields, expected " +
                            std::to_string(ncols));

    bool has_header = false;
    for (const auto& cell : rows[0]) {
        double v;
        if (!is_missing(cell) && !parse_double(cell, v)) {
            has_header = true;
            break;
        }
    }
    std::vector<std::string> names(ncols);
    if (has_header) {
        names = rows[0];
        rows.erase(rows.begin());
    } else {
        for (std::size_t j = 0; j < ncols; ++j) names[j] = "c" + std::to_string(j);
    }

    std::size_t drop = ncols;
    if (!drop_col.empty()) {
        for (std::size_t j = 0; j < ncols; ++j)
            if (names[j] == drop_col) drop = j;
        if (drop == ncols) {
            double v;
            if (parse_double(drop_col, v) && v >= 0 && v < static_cast<double>(ncols) &&
                v == std::floor(v))
                drop = static_cast<std::size_t>(v);
        }
        if (drop == ncols)
            throw DataError("column '" + drop_col + "' not found");
    }

    const std::size_t keep = ncols - (drop < ncols ? 1 : 0);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(keep));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Eigen::Index jj = 0;
        for (std::size_t j = 0; j < ncols; ++j) {
            if (j == drop) continue;
            double v;
            if (is_missing(rows[i][j]) || !parse_double(rows[i][j], v))
                throw DataError("non-numeric value at row " +
                                std::to_string(i + (has_header ? 2 : 1)) + ", column '" +
                                names[j] + "'");
            X(static_cast<Eigen::Index>(i), jj++) = v;
        }
    }
    return X;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
    std::ostringstream out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out << ',';
        out << header[j];
    }
    out << '\n';
    char buf[64];
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j) out << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", values(i, j));
            out << buf;
        }
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp);
        out << contents;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataError("cannot rename " + tmp + " to " + path);
}

} // namespace spca
