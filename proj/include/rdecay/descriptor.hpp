#pragma once

#include <string>

#include "rdecay/model.hpp"

namespace rdecay {

/// Builds a model from a JSON descriptor
///   {"type": ..., "dimension": n, "kappa": k, "params": {...}, "table": [[r, mu], ...]}.
/// Unknown fields, wrong types and invalid models raise ParseError.
ModelManifold parse_model(const std::string& json_text);
ModelManifold load_model(const std::string& path);

/// Canonical JSON echo of a model (type, dimension, kappa, params, table).
std::string describe_model(const ModelManifold& m);

}  // namespace rdecay
