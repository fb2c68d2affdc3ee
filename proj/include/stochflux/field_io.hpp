#pragma once

// Field snapshot serialization: CSV rows (x, value) for plotting, and a
// compact little-endian binary record
//
//   { N : u32, L : f64, values : f64 x N }
//
// for replay and debugging dumps.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "stochflux/grid.hpp"

namespace stochflux {

namespace detail {

template <class T>
void write_le(std::ostream& out, T value) {
  // the build targets are little-endian; memcpy keeps this well-defined
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
  char buf[sizeof(T)];
  in.read(buf, sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace detail

inline void write_field_binary(std::ostream& out, const Field& f) {
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.cells));
  detail::write_le<double>(out, f.grid.length);
  for (double v : f.values) detail::write_le<double>(out, v);
}

inline Field read_field_binary(std::istream& in) {
  const auto n = detail::read_le<std::uint32_t>(in);
  const double length = detail::read_le<double>(in);
  if (!in) throw std::runtime_error("read_field_binary: truncated header");
  Field f(Grid(length, static_cast<int>(n)));
  for (int i = 0; i < f.size(); ++i) f[i] = detail::read_le<double>(in);
  if (!in) throw std::runtime_error("read_field_binary: truncated payload");
  return f;
}

inline void write_field_csv(std::ostream& out, const Field& f) {
  out << "x,value\n";
  char buf[64];
  for (int i = 0; i < f.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", f.grid.x(i), f[i]);
    out << buf;
  }
}

inline void write_field_binary_file(const std::string& path, const Field& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_field_binary(out, f);
}

inline Field read_field_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return read_field_binary(in);
}

}  // namespace stochflux
