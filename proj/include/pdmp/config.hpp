#pragma once

// JSON model configs.
//
//   {
//     "name": "binary",
//     "states": 2,
//     "domain": [-1, 1],
//     "epsilon": 0.1,
//     "params": {"wp": 1.0, "wm": 1.0},
//     "drift": ["-(1 + x)", "1 - x"],
//     "rates": {"1,2": "wp", "2,1": "wm"},
//     "sigma": ["0.5", "0.5"]                      (optional)
//   }
//
// State indices in "rates" are 1-based. Instead of "states"/"drift"/"rates" a
// config may give an "ion_channel" block
//
//     "ion_channel": {"channels": "N", "alpha": "...", "beta": "...",
//                     "f": "...", "g": "..."}
//
// which expands to N+1 states n = 0..N (config state n+1) with drift
// (n/N) f(x) - g(x), opening rate (N-n) alpha(x) and closing rate n beta(x).

#include <string>
#include <string_view>

#include "pdmp/model.hpp"

namespace pdmp {

/// Parses a JSON document. `origin` prefixes diagnostics (usually the path).
/// Throws ValidationError for malformed JSON and schema problems; messages
/// name the key and, for expressions, the byte offset. load_model_file throws
/// IoError when the file cannot be read.
ModelDefinition parse_model_definition(std::string_view json, const std::string& origin = "<config>");

HybridModel load_model_json(std::string_view json, const std::string& origin = "<config>");
HybridModel load_model_file(const std::string& path);

/// Bundled configs: "binary", "bistable", "sodium_channel". Returns an empty
/// view for unknown names.
std::string_view builtin_model_json(std::string_view name);

}  // namespace pdmp
