#pragma once

#include <charconv>
#include <string>

namespace evfgn {

/// Shortest round-trip decimal form; locale independent.
inline std::string format_double(double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

}  // namespace evfgn
