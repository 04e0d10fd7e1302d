#pragma once

// Little-endian float32 blob helpers shared by the model and dataset formats.

#include "fgprop/error.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace fgprop::detail {

inline void write_f32(std::ostream& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  const char bytes[4] = {static_cast<char>(bits & 0xffu), static_cast<char>((bits >> 8) & 0xffu),
                         static_cast<char>((bits >> 16) & 0xffu), static_cast<char>((bits >> 24) & 0xffu)};
  out.write(bytes, 4);
}

inline double read_f32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw FormatError("weight blob is truncated");
  const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[3]) << 24);
  return static_cast<double>(std::bit_cast<float>(bits));
}

/// Reads the single-line JSON manifest that precedes every blob.
inline std::string read_header_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw FormatError("missing manifest header");
  return line;
}

inline void expect_end(std::istream& in, const char* what) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(std::string(what) + " blob is longer than the manifest declares");
  }
}

}  // namespace fgprop::detail
