#ifndef PFREC_IO_UTIL_HPP
#define PFREC_IO_UTIL_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "pfrec/errors.hpp"

namespace pfrec {

inline std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string() + " for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  return out;
}

// 17 significant digits: enough to round-trip any double exactly.
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace pfrec

#endif
