#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace fluidic {

/// Shortest decimal text that reads back to exactly `value`.
std::string format_number(double value);

/// Whole-token decimal parse; rejects trailing garbage, inf and nan.
std::optional<double> parse_number(std::string_view text);

}  // namespace fluidic
