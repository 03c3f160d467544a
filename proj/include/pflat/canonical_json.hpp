#pragma once

#include <json.hpp>

#include <string>

namespace pflat {

/// Serializes with sorted keys, no whitespace, floats as %.12g and integers
/// verbatim. Equal documents always produce identical bytes.
std::string canonical_dump(const nlohmann::json& value);

/// %.12g, with "-0" normalized to "0".
std::string format_real(double value);

}  // namespace pflat
