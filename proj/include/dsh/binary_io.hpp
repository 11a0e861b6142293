#pragma once

#include "dsh/types.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

// Byte-level helpers shared by the binary containers: unsigned 64-bit
// little-endian counts, 64-bit IEEE-754 little-endian floats, matrices
// row-major.

namespace dsh::detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_u64(std::istream& is, const char* what) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8))
    throw IoError(std::string("file truncated while reading ") + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(get_u64(is, what));
}

inline void put_matrix(std::ostream& os, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) put_f64(os, m(i, j));
}

inline Matrix get_matrix(std::istream& is, Index rows, Index cols, const char* what) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = get_f64(is, what);
  return m;
}

inline Index checked_dim(std::uint64_t v, const char* what) {
  if (v == 0 || v > (std::uint64_t(1) << 32))
    throw IoError(std::string("implausible ") + what + " in file header: " + std::to_string(v));
  return static_cast<Index>(v);
}

}  // namespace dsh::detail
