#pragma once

#include <charconv>
#include <string>

namespace blochhom::io {

/// Locale-independent decimal with 17 significant digits.
inline std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, end);
}

/// Shortest round-trip representation, for messages.
inline std::string brief(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace blochhom::io
