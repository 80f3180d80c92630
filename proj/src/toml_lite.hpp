#pragma once

#include <string>

#include "json.hpp"

namespace uhcm::detail {

/// Minimal TOML reader covering the subset used by the config files:
/// comments, [table] and [[array-of-tables]] headers with dotted paths,
/// bare/dotted keys, strings with basic escapes, integers, floats, booleans,
/// and (nested) arrays of those. Parses into a JSON document.
nlohmann::json parse_toml(const std::string& text);

}  // namespace uhcm::detail
