#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace shade::detail {

/// Shortest decimal that round-trips the exact double; locale independent.
inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& where) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw std::runtime_error(where + ": not a number: '" + std::string(text) +
                             "'");
  }
  return value;
}

inline long long parse_int(std::string_view text, const std::string& where) {
  long long value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw std::runtime_error(where + ": not an integer: '" +
                             std::string(text) + "'");
  }
  return value;
}

}  // namespace shade::detail
