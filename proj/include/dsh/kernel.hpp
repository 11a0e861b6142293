#pragma once

#include "dsh/rng.hpp"
#include "dsh/types.hpp"

#include <cmath>
#include <string>

// Per-modality RBF feature maps. A modality's common-space embedding is
// projection * kernel_features(map, X), where the kernel features compare
// each (zero-centered) sample against a set of anchor samples drawn from the
// training set.

namespace dsh {

// Anchor set and width of one modality's RBF map. Columns of `anchors` are
// training samples; sigma is the mean squared pairwise distance of the
// training features.
template <typename Scalar>
struct KernelMap {
  MatrixX<Scalar> anchors;  // d x M
  Scalar sigma = Scalar(0);
  Index modality_id = 0;

  Index anchor_count() const { return anchors.cols(); }
  Index feature_dim() const { return anchors.rows(); }
};

template <typename Scalar>
struct Centered {
  MatrixX<Scalar> features;  // d x n, every row sums to zero
  VectorX<Scalar> mean;      // per-feature mean of the raw input, d x 1
};

// Removes the per-feature mean. The mean is kept so unseen queries can be
// centered identically at encode time.
template <typename Derived>
Centered<typename Derived::Scalar> center_features(const Eigen::MatrixBase<Derived>& raw) {
  using S = typename Derived::Scalar;
  if (raw.rows() < 1 || raw.cols() < 1)
    throw std::invalid_argument("center_features: empty feature matrix");
  if (!raw.allFinite()) throw InvalidDataError("center_features: non-finite feature entries");
  Centered<S> out;
  out.mean = raw.rowwise().mean();
  out.features = raw.colwise() - out.mean;
  return out;
}

// Mean squared distance over all ordered sample pairs, (1/n^2) sum_ij
// ||x_i - x_j||^2, including the zero i = j terms. Expanding the square gives
// (2/n) sum_i ||x_i - mu||^2 with mu the column mean, so the exact value costs
// O(nd) for any n; centering first avoids cancellation for far-from-origin
// data and makes the estimate translation-invariant to machine precision.
template <typename Derived>
typename Derived::Scalar estimate_sigma(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  const Index n = x.cols();
  if (n < 2) throw std::invalid_argument("estimate_sigma: need at least two samples");
  if (!x.allFinite()) throw InvalidDataError("estimate_sigma: non-finite feature entries");
  const VectorX<S> mean = x.rowwise().mean();
  const S centered_energy = (x.colwise() - mean).squaredNorm();  // sum_i ||x_i - mu||^2
  const S sigma = S(2) * centered_energy / S(n);
  const S scale = x.squaredNorm() / S(n) + S(1);
  if (!(sigma > scale * S(1e-12)))
    throw DegenerateKernelError("estimate_sigma: all samples coincide, kernel width is zero");
  return sigma;
}

// M distinct columns of x drawn uniformly without replacement; the rng is
// shared so callers can interleave the draw with other seeded choices.
template <typename Derived>
KernelMap<typename Derived::Scalar> sample_anchors(const Eigen::MatrixBase<Derived>& x,
                                                   Index anchor_count, Rng& rng,
                                                   Index modality_id = 0) {
  using S = typename Derived::Scalar;
  const Index n = x.cols();
  if (anchor_count < 1 || anchor_count > n)
    throw std::invalid_argument("sample_anchors: anchor count " + std::to_string(anchor_count) +
                                " outside [1, " + std::to_string(n) + "]");
  KernelMap<S> map;
  map.modality_id = modality_id;
  map.sigma = estimate_sigma(x);
  const std::vector<Index> picks = sample_without_replacement(n, anchor_count, rng);
  map.anchors.resize(x.rows(), anchor_count);
  for (Index i = 0; i < anchor_count; ++i)
    map.anchors.col(i) = x.col(picks[static_cast<std::size_t>(i)]);
  return map;
}

template <typename Derived>
KernelMap<typename Derived::Scalar> sample_anchors(const Eigen::MatrixBase<Derived>& x,
                                                   Index anchor_count, std::uint64_t seed,
                                                   Index modality_id = 0) {
  Rng rng(seed);
  return sample_anchors(x, anchor_count, rng, modality_id);
}

// RBF features: entry (i, j) = exp(-||x_j - a_i||^2 / sigma). Distances are
// formed from explicit differences, so a sample that coincides with an anchor
// maps to exactly 1 and every entry lies in (0, 1].
template <typename Scalar, typename Derived>
MatrixX<Scalar> kernel_features(const KernelMap<Scalar>& map,
                                const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != map.feature_dim())
    throw std::invalid_argument("kernel_features: feature dim " + std::to_string(x.rows()) +
                                " does not match anchor dim " +
                                std::to_string(map.feature_dim()));
  if (!(map.sigma > Scalar(0)))
    throw std::invalid_argument("kernel_features: kernel width must be positive");
  const Index m = map.anchor_count();
  const Index n = x.cols();
  const Scalar inv_sigma = Scalar(1) / map.sigma;
  MatrixX<Scalar> phi(m, n);
  for (Index i = 0; i < m; ++i)
    phi.row(i) =
        (x.colwise() - map.anchors.col(i)).colwise().squaredNorm() * (-inv_sigma);
  return phi.array().exp();
}

}  // namespace dsh
