#pragma once

#include "dsh/binary_io.hpp"
#include "dsh/config.hpp"
#include "dsh/kernel.hpp"
#include "dsh/types.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

// Trained model artifact, out-of-sample code generation, and the bit-packed
// code representation used for Hamming search.

namespace dsh {

template <typename Scalar>
struct HashModel {
  struct Modality {
    MatrixX<Scalar> projection;  // r x M, maps kernel features to code space
    KernelMap<Scalar> kernel;
    VectorX<Scalar> center;      // training feature mean, d x 1
  };

  Index code_length = 0;       // r
  std::vector<Modality> modalities;
  VectorX<Scalar> modality_weights;  // alpha, on the simplex
  TrainConfig config;                // training configuration echo
  std::uint64_t iterations = 0;
  double final_objective = 0.0;

  Index modality_count() const { return static_cast<Index>(modalities.size()); }

  void check_modality(Index m) const {
    if (m < 0 || m >= modality_count())
      throw std::invalid_argument("unknown modality index " + std::to_string(m));
  }
};

// Out-of-sample extension: center the query with the stored training mean,
// evaluate its kernel vector, project, take signs (sgn(0) = +1).
template <typename Scalar, typename Derived>
MatrixX<Scalar> encode_batch(const HashModel<Scalar>& model,
                             const Eigen::MatrixBase<Derived>& raw, Index modality) {
  model.check_modality(modality);
  const auto& mod = model.modalities[static_cast<std::size_t>(modality)];
  if (raw.rows() != mod.center.size())
    throw std::invalid_argument("encode: feature dim " + std::to_string(raw.rows()) +
                                " does not match modality dim " +
                                std::to_string(mod.center.size()));
  const MatrixX<Scalar> centered = raw.colwise() - mod.center;
  return sign_matrix(mod.projection * kernel_features(mod.kernel, centered));
}

template <typename Scalar, typename Derived>
VectorX<Scalar> encode(const HashModel<Scalar>& model, const Eigen::MatrixBase<Derived>& raw,
                       Index modality) {
  if (raw.cols() != 1) throw std::invalid_argument("encode: expected a single column vector");
  return encode_batch(model, raw, modality);
}

// ----------------------------------------------------------------------------
// Bit-packed codes. Bit j of word w holds code index 64*w + j (little-endian
// within the word); a set bit means +1. Trailing bits of the last word are
// kept zero so word-level popcounts give Hamming distances directly.

struct PackedCodes {
  Index code_length = 0;  // r
  Index count = 0;        // number of codes
  std::vector<std::uint64_t> words;  // count * words_per_code, code-major

  Index words_per_code() const { return (code_length + 63) / 64; }
  const std::uint64_t* code(Index j) const {
    return words.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(words_per_code());
  }
};

template <typename Derived>
PackedCodes pack(const Eigen::MatrixBase<Derived>& codes) {
  using S = typename Derived::Scalar;
  PackedCodes out;
  out.code_length = codes.rows();
  out.count = codes.cols();
  const Index wpc = out.words_per_code();
  out.words.assign(static_cast<std::size_t>(wpc) * static_cast<std::size_t>(out.count), 0);
  for (Index j = 0; j < out.count; ++j) {
    std::uint64_t* word = out.words.data() + static_cast<std::size_t>(j * wpc);
    for (Index i = 0; i < out.code_length; ++i)
      if (codes(i, j) > S(0)) word[i >> 6] |= std::uint64_t(1) << (i & 63);
  }
  return out;
}

inline PackedCodes pack_one(const Vector& code) { return pack(code); }

template <typename Scalar = double>
MatrixX<Scalar> unpack(const PackedCodes& packed) {
  const Index wpc = packed.words_per_code();
  if (static_cast<Index>(packed.words.size()) != wpc * packed.count)
    throw std::invalid_argument("unpack: word count " + std::to_string(packed.words.size()) +
                                " does not match " + std::to_string(packed.count) + " codes of " +
                                std::to_string(packed.code_length) + " bits");
  MatrixX<Scalar> codes(packed.code_length, packed.count);
  for (Index j = 0; j < packed.count; ++j) {
    const std::uint64_t* word = packed.code(j);
    for (Index i = 0; i < packed.code_length; ++i)
      codes(i, j) = (word[i >> 6] >> (i & 63)) & 1 ? Scalar(1) : Scalar(-1);
  }
  return codes;
}

inline int hamming_distance(const std::uint64_t* a, const std::uint64_t* b, Index words) {
  int d = 0;
  for (Index w = 0; w < words; ++w) d += std::popcount(a[w] ^ b[w]);
  return d;
}

inline int hamming_distance(const PackedCodes& a, Index i, const PackedCodes& b, Index j) {
  if (a.code_length != b.code_length)
    throw std::invalid_argument("hamming_distance: code lengths differ");
  return hamming_distance(a.code(i), b.code(j), a.words_per_code());
}

// ----------------------------------------------------------------------------
// Packed-code file, magic "DSB1": version, code length and code count as
// unsigned 64-bit little-endian, then the packed words in code-major order.

inline constexpr char kCodesMagic[4] = {'D', 'S', 'B', '1'};
inline constexpr std::uint64_t kCodesVersion = 1;

inline void save_packed_codes(const PackedCodes& codes, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(kCodesMagic, 4);
  detail::put_u64(os, kCodesVersion);
  detail::put_u64(os, static_cast<std::uint64_t>(codes.code_length));
  detail::put_u64(os, static_cast<std::uint64_t>(codes.count));
  for (std::uint64_t w : codes.words) detail::put_u64(os, w);
  os.flush();
  if (!os) throw IoError("write failure on " + path);
}

inline PackedCodes load_packed_codes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kCodesMagic, 4) != 0)
    throw IoError(path + ": bad magic, not a packed-code file");
  const std::uint64_t version = detail::get_u64(is, "version");
  if (version != kCodesVersion)
    throw IoError(path + ": unsupported packed-code version " + std::to_string(version));
  PackedCodes codes;
  codes.code_length = detail::checked_dim(detail::get_u64(is, "code length"), "code length");
  codes.count = detail::checked_dim(detail::get_u64(is, "code count"), "code count");
  codes.words.resize(static_cast<std::size_t>(codes.words_per_code()) *
                     static_cast<std::size_t>(codes.count));
  for (std::uint64_t& w : codes.words) w = detail::get_u64(is, "code words");
  is.peek();
  if (!is.eof()) throw IoError(path + ": trailing bytes after code payload");
  return codes;
}

// ----------------------------------------------------------------------------
// Model file, magic "DSH1". Counts are unsigned 64-bit little-endian, floats
// 64-bit IEEE-754 little-endian, matrices row-major. Layout documented in the
// README.

inline constexpr char kModelMagic[4] = {'D', 'S', 'H', '1'};
inline constexpr std::uint64_t kModelVersion = 1;

inline void save_model(const HashModel<double>& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(kModelMagic, 4);
  detail::put_u64(os, kModelVersion);
  detail::put_u64(os, static_cast<std::uint64_t>(model.code_length));
  detail::put_u64(os, static_cast<std::uint64_t>(model.modality_count()));
  for (Index m = 0; m < model.modality_count(); ++m)
    detail::put_f64(os, model.modality_weights(m));
  const TrainConfig& c = model.config;
  detail::put_f64(os, c.beta);
  detail::put_f64(os, c.eta);
  detail::put_f64(os, c.lambda);
  detail::put_f64(os, c.gamma);
  detail::put_f64(os, c.tol);
  detail::put_u64(os, static_cast<std::uint64_t>(c.anchors));
  detail::put_u64(os, static_cast<std::uint64_t>(c.max_iters));
  detail::put_u64(os, static_cast<std::uint64_t>(c.dcc_sweeps));
  detail::put_u64(os, c.seed);
  detail::put_u64(os, model.iterations);
  detail::put_f64(os, model.final_objective);
  for (const auto& mod : model.modalities) {
    detail::put_u64(os, static_cast<std::uint64_t>(mod.kernel.feature_dim()));
    detail::put_u64(os, static_cast<std::uint64_t>(mod.kernel.anchor_count()));
    detail::put_f64(os, mod.kernel.sigma);
    detail::put_matrix(os, mod.projection);
    detail::put_matrix(os, mod.kernel.anchors);
    for (Index i = 0; i < mod.center.size(); ++i) detail::put_f64(os, mod.center(i));
  }
  os.flush();
  if (!os) throw IoError("write failure on " + path);
}

inline HashModel<double> load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0)
    throw IoError(path + ": bad magic, not a model file");
  const std::uint64_t version = detail::get_u64(is, "version");
  if (version != kModelVersion)
    throw IoError(path + ": unsupported model version " + std::to_string(version));
  HashModel<double> model;
  model.code_length = detail::checked_dim(detail::get_u64(is, "code length"), "code length");
  const Index modality_count =
      detail::checked_dim(detail::get_u64(is, "modality count"), "modality count");
  model.modality_weights.resize(modality_count);
  for (Index m = 0; m < modality_count; ++m)
    model.modality_weights(m) = detail::get_f64(is, "modality weight");
  TrainConfig& c = model.config;
  c.bits = model.code_length;
  c.beta = detail::get_f64(is, "beta");
  c.eta = detail::get_f64(is, "eta");
  c.lambda = detail::get_f64(is, "lambda");
  c.gamma = detail::get_f64(is, "gamma");
  c.tol = detail::get_f64(is, "tol");
  c.anchors = static_cast<Index>(detail::get_u64(is, "anchors"));
  c.max_iters = static_cast<Index>(detail::get_u64(is, "max_iters"));
  c.dcc_sweeps = static_cast<Index>(detail::get_u64(is, "dcc_sweeps"));
  c.seed = detail::get_u64(is, "seed");
  model.iterations = detail::get_u64(is, "iterations");
  model.final_objective = detail::get_f64(is, "final objective");
  model.modalities.resize(static_cast<std::size_t>(modality_count));
  for (Index m = 0; m < modality_count; ++m) {
    auto& mod = model.modalities[static_cast<std::size_t>(m)];
    mod.kernel.modality_id = m;
    const Index d = detail::checked_dim(detail::get_u64(is, "feature dim"), "feature dim");
    const Index anchors = detail::checked_dim(detail::get_u64(is, "anchor count"), "anchor count");
    mod.kernel.sigma = detail::get_f64(is, "sigma");
    mod.projection = detail::get_matrix(is, model.code_length, anchors, "projection");
    mod.kernel.anchors = detail::get_matrix(is, d, anchors, "anchors");
    mod.center.resize(d);
    for (Index i = 0; i < d; ++i) mod.center(i) = detail::get_f64(is, "center");
  }
  is.peek();
  if (!is.eof()) throw IoError(path + ": trailing bytes after model payload");
  return model;
}

}  // namespace dsh
