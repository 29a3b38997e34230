#pragma once
#include <nlohmann/json_fwd.hpp>
#include <string>

#include "finde/graph.hpp"

namespace finde {

// Single-file checkpoint: one line of JSON (format tag, caller-supplied meta,
// parameter names and shapes in declaration order), a newline, then the raw
// little-endian float64 parameter values concatenated in the same order.
void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const ParamStore& ps);

// Loads parameters into a fresh store (names, shapes, values restored exactly)
// and returns the meta block. Raises IoError on malformed files.
nlohmann::json load_checkpoint(const std::string& path, ParamStore& ps_out);

}  // namespace finde
