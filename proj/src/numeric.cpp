#include "fluidic/numeric.hpp"

#include <charconv>
#include <cmath>

namespace fluidic {

std::string format_number(double value) {
  if (value == 0.0) {
    return "0";
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) {
    return std::nullopt;
  }
  // from_chars rejects a leading '+', which hand-written files sometimes carry.
  if (text.front() == '+') {
    text.remove_prefix(1);
    if (text.empty() || text.front() == '-' || text.front() == '+') {
      return std::nullopt;
    }
  }
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value,
                                   std::chars_format::general);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace fluidic
