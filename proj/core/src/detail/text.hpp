#pragma once

// Internal text helpers shared by the serializers. Not installed.

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>

#include "carbmon/errors.hpp"

namespace carbmon::detail {

// Shortest decimal form that parses back to exactly the same double.
inline std::string round_trip(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

// Fixed 17-significant-digit form; also round-trip exact.
inline std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline double parse_double(std::string_view s, errc code,
                           const std::string& context) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    raise(code, "cannot parse number '" + std::string(s) + "' in " + context);
  }
  return v;
}

inline long parse_long(std::string_view s, errc code,
                       const std::string& context) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    raise(code, "cannot parse integer '" + std::string(s) + "' in " + context);
  }
  return v;
}

inline std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace carbmon::detail
