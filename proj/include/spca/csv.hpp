#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "spca/dataset.hpp"

namespace spca {

/// Parsed CSV with predictors split from the designated response column.
/// For classification the response holds class indices (0..q-1) mapped from
/// the sorted distinct labels, with the original label strings retained.
struct RawData {
    Eigen::MatrixXd X;                       // n x p predictors
    Eigen::MatrixXd Y;                       // n x 1 response / class index
    Task task = Task::regression;
    std::vector<std::string> feature_names;
    std::string response_name;
    std::vector<std::string> class_names;    // classification only
    int n_classes = 0;                       // classification only
};

/// Reads a CSV file with an optional header row. `response_col` selects the
/// response by header name or by zero-based index. Missing or non-numeric
/// predictor cells are rejected with row/column diagnostics.
RawData load_csv(const std::string& path, const std::string& response_col, Task task);

/// Reads a purely numeric feature matrix, optionally dropping one column by
/// name or index (a response column present in the file). Zero data rows are
/// permitted.
Eigen::MatrixXd load_matrix_csv(const std::string& path, const std::string& drop_col = "");

/// Writes rows of numeric data as CSV (used for predictions and plot data).
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

/// Writes a whole file atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& contents);

} // namespace spca
