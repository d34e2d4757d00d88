#pragma once

#include <charconv>
#include <string>

namespace forgenet {

// Shortest decimal representation that round-trips the double exactly.
// All CSV/JSON writers go through this so repeated runs with identical
// inputs produce byte-identical files.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace forgenet
