#pragma once

#include <string>

#include "spca/harness.hpp"

namespace spca {

/// Writes a fitted model as self-describing structured text: a schema version
/// line, scalar fields, and shape-annotated numeric blocks in full precision.
void save_model(const std::string& path, const FittedModel& model);

/// Loads a model artifact; rejects unknown schema versions.
FittedModel load_model(const std::string& path);

} // namespace spca
