#pragma once

#include "dsh/types.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

// Seeded randomness helpers. std::mt19937_64 output is fully specified by the
// standard; the distributions here are hand-rolled because the standard
// library's distribution classes are implementation-defined, which would make
// seeds non-portable across toolchains.

namespace dsh {

using Rng = std::mt19937_64;

// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  const std::uint64_t residue = (0ULL - n) % n;  // 2^64 mod n
  if (residue == 0) return rng() % n;
  const std::uint64_t limit = 0ULL - residue;  // largest multiple of n
  for (;;) {
    const std::uint64_t r = rng();
    if (r < limit) return r % n;
  }
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes exactly two engine draws.
inline double standard_normal(Rng& rng) {
  constexpr double two_pi = 6.283185307179586;
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

template <typename Scalar = double>
MatrixX<Scalar> normal_matrix(Index rows, Index cols, Rng& rng) {
  MatrixX<Scalar> m(rows, cols);
  for (Index j = 0; j < cols; ++j)      // column-major fill order
    for (Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(standard_normal(rng));
  return m;
}

// Fisher-Yates permutation of 0..n-1.
inline std::vector<Index> random_permutation(Index n, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index(0));
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

// k distinct indices drawn uniformly from 0..n-1 (partial Fisher-Yates).
inline std::vector<Index> sample_without_replacement(Index n, Index k, Rng& rng) {
  if (k < 0 || k > n)
    throw std::invalid_argument("sample_without_replacement: need 0 <= k <= n");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index(0));
  for (Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Index>(
                           uniform_index(rng, static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace dsh
