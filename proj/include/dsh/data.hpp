#pragma once

// Dataset ingestion, train/query splitting, and a synthetic paired-modality
// generator for desk-scale experiments. Feature files are CSV (samples as
// rows, optional header row) or the "DSM1" binary container; label files are
// CSV, either 0/1 one-hot rows or a single category-index column. Internally
// features are d x n and labels c x n (samples as columns).

#include "dsh/binary_io.hpp"
#include "dsh/rng.hpp"
#include "dsh/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace dsh {

enum class FileFormat { auto_detect, csv, dsm1 };

struct SplitSpec {
  Index train_count = 0;
  std::uint64_t seed = 0;
};

struct PairedDataset {
  std::vector<Matrix> modalities;  // each d_m x n
  Matrix labels;                   // c x n, entries in {0,1}
  std::vector<std::string> names;  // optional; size n when present

  Index modality_count() const { return static_cast<Index>(modalities.size()); }
  Index sample_count() const { return labels.cols(); }

  void validate() const {
    if (modalities.empty()) throw InvalidDataError("dataset has no modalities");
    const Index n = labels.cols();
    for (std::size_t m = 0; m < modalities.size(); ++m) {
      if (modalities[m].cols() != n)
        throw InvalidDataError("modality " + std::to_string(m) + " has " +
                               std::to_string(modalities[m].cols()) + " samples but labels have " +
                               std::to_string(n));
      if (!modalities[m].allFinite())
        throw InvalidDataError("modality " + std::to_string(m) + " contains non-finite values");
    }
    if (!names.empty() && static_cast<Index>(names.size()) != n)
      throw InvalidDataError("name list length does not match sample count");
    validate_label_matrix(labels);
  }
};

namespace detail {

inline bool blank_line(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string tok = comma == std::string::npos ? line.substr(start)
                                                 : line.substr(start, comma - start);
    const std::size_t head = tok.find_first_not_of(" \t\r");
    if (head == std::string::npos) {
      tok.clear();
    } else {
      tok = tok.substr(head, tok.find_last_not_of(" \t\r") - head + 1);
    }
    out.push_back(std::move(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_number(const std::string& tok, double& value) {
  if (tok.empty()) return false;
  const char* last = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), last, value);
  return ec == std::errc() && ptr == last;
}

inline std::string csv_pos(const std::string& path, std::size_t lineno) {
  return path + ":" + std::to_string(lineno) + ": ";
}

}  // namespace detail

// Reads a numeric CSV with file rows as matrix rows. The first non-blank line
// may be a header (any token that is not a number); every later parse failure
// is an error naming the offending line.
inline Matrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::string line;
  std::size_t lineno = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank_line(line)) continue;
    const std::vector<std::string> toks = detail::split_csv_line(line);
    std::vector<double> row(toks.size());
    std::size_t bad = toks.size();
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (!detail::parse_number(toks[i], row[i])) {
        bad = i;
        break;
      }
    }
    if (bad != toks.size()) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw InvalidDataError(detail::csv_pos(path, lineno) + "cannot parse '" + toks[bad] +
                             "' as a number");
    }
    header_allowed = false;
    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw InvalidDataError(detail::csv_pos(path, lineno) + "expected " + std::to_string(width) +
                             " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidDataError(path + ": no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

// Writes matrix rows as CSV lines with enough digits to round-trip doubles.
inline void save_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  char buf[40];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j > 0) out.put(',');
      out << buf;
    }
    out.put('\n');
  }
  if (!out) throw IoError("write failed: " + path);
}

// "DSM1" container: magic, rows, cols as unsigned 64-bit little-endian, then
// row-major 64-bit floats. Rows are samples, matching the CSV orientation.
inline constexpr char kDatasetMagic[4] = {'D', 'S', 'M', '1'};

inline void save_matrix_dsm1(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kDatasetMagic, 4);
  detail::put_u64(out, static_cast<std::uint64_t>(m.rows()));
  detail::put_u64(out, static_cast<std::uint64_t>(m.cols()));
  detail::put_matrix(out, m);
  if (!out) throw IoError("write failed: " + path);
}

inline Matrix load_matrix_dsm1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kDatasetMagic))
    throw IoError(path + ": not a DSM1 container");
  const Index rows = detail::checked_dim(detail::get_u64(in, "row count"), "row count");
  const Index cols = detail::checked_dim(detail::get_u64(in, "column count"), "column count");
  Matrix m = detail::get_matrix(in, rows, cols, path.c_str());
  in.peek();
  if (!in.eof()) throw IoError(path + ": trailing bytes after matrix payload");
  return m;
}

namespace detail {

inline bool has_dsm1_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  return bool(in.read(magic, 4)) && std::equal(magic, magic + 4, kDatasetMagic);
}

}  // namespace detail

// Loads a matrix in file orientation (rows are samples), deciding between CSV
// and the binary container by magic when the format is auto_detect.
inline Matrix load_matrix(const std::string& path, FileFormat format = FileFormat::auto_detect) {
  if (format == FileFormat::auto_detect)
    format = detail::has_dsm1_magic(path) ? FileFormat::dsm1 : FileFormat::csv;
  return format == FileFormat::dsm1 ? load_matrix_dsm1(path) : load_matrix_csv(path);
}

// Feature files hold samples as rows; internally samples are columns.
inline Matrix load_features(const std::string& path, FileFormat format = FileFormat::auto_detect) {
  return load_matrix(path, format).transpose();
}

// Labels: either an n x c matrix of 0/1 memberships or a single column of
// category indices, expanded to one-hot. Returns c x n.
inline Matrix load_labels(const std::string& path, FileFormat format = FileFormat::auto_detect) {
  const Matrix raw = load_matrix(path, format);
  Matrix labels;
  if (raw.cols() == 1) {
    const Index n = raw.rows();
    Index classes = 0;
    for (Index i = 0; i < n; ++i) {
      const double v = raw(i, 0);
      if (!(v >= 0.0) || v != std::floor(v))
        throw InvalidDataError(path + ": category index " + std::to_string(v) +
                               " is not a non-negative integer (sample " + std::to_string(i) + ")");
      classes = std::max(classes, static_cast<Index>(v) + 1);
    }
    labels = Matrix::Zero(classes, n);
    for (Index i = 0; i < n; ++i) labels(static_cast<Index>(raw(i, 0)), i) = 1.0;
  } else {
    for (Index i = 0; i < raw.rows(); ++i)
      for (Index j = 0; j < raw.cols(); ++j)
        if (raw(i, j) != 0.0 && raw(i, j) != 1.0)
          throw InvalidDataError(path + ": label entry " + std::to_string(raw(i, j)) +
                                 " at sample " + std::to_string(i) + ", class " +
                                 std::to_string(j) + " is not 0 or 1");
    labels = raw.transpose();
  }
  validate_label_matrix(labels);
  return labels;
}

// Assembles a dataset from per-modality feature files plus a label file.
inline PairedDataset load_dataset(const std::vector<std::string>& feature_paths,
                                  const std::string& label_path,
                                  FileFormat format = FileFormat::auto_detect) {
  if (feature_paths.empty()) throw InvalidDataError("no feature files given");
  PairedDataset ds;
  ds.modalities.reserve(feature_paths.size());
  for (const std::string& path : feature_paths) ds.modalities.push_back(load_features(path, format));
  ds.labels = load_labels(label_path, format);
  const Index n = ds.labels.cols();
  for (std::size_t m = 0; m < ds.modalities.size(); ++m) {
    if (ds.modalities[m].cols() != n)
      throw InvalidDataError(feature_paths[m] + " has " + std::to_string(ds.modalities[m].cols()) +
                             " samples but " + label_path + " has " + std::to_string(n));
    if (m > 0 && ds.modalities[m].cols() != ds.modalities[0].cols())
      throw InvalidDataError(feature_paths[m] + " and " + feature_paths[0] +
                             " disagree on sample count");
  }
  ds.validate();
  return ds;
}

// Writes every modality and the labels next to each other; `stem` is extended
// with _mod<k> / _labels suffixes. Returns the written paths (features first).
inline std::vector<std::string> save_dataset(const PairedDataset& ds, const std::string& stem,
                                             FileFormat format = FileFormat::dsm1) {
  if (format == FileFormat::auto_detect) format = FileFormat::dsm1;
  const std::string ext = format == FileFormat::dsm1 ? ".dsm1" : ".csv";
  std::vector<std::string> paths;
  for (Index m = 0; m < ds.modality_count(); ++m) {
    const std::string path = stem + "_mod" + std::to_string(m) + ext;
    const Matrix rows = ds.modalities[static_cast<std::size_t>(m)].transpose();
    format == FileFormat::dsm1 ? save_matrix_dsm1(path, rows) : save_matrix_csv(path, rows);
    paths.push_back(path);
  }
  const std::string label_path = stem + "_labels" + ext;
  const Matrix label_rows = ds.labels.transpose();
  format == FileFormat::dsm1 ? save_matrix_dsm1(label_path, label_rows)
                             : save_matrix_csv(label_path, label_rows);
  paths.push_back(label_path);
  return paths;
}

// Seeded disjoint, exhaustive train/query index split; each side keeps the
// original sample order.
inline std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n,
                                                                       const SplitSpec& spec) {
  if (spec.train_count < 1 || spec.train_count >= n)
    throw InvalidDataError("train_count " + std::to_string(spec.train_count) +
                           " out of range for " + std::to_string(n) + " samples");
  Rng rng(spec.seed);
  const std::vector<Index> perm = random_permutation(n, rng);
  std::vector<Index> train(perm.begin(), perm.begin() + spec.train_count);
  std::vector<Index> query(perm.begin() + spec.train_count, perm.end());
  std::sort(train.begin(), train.end());
  std::sort(query.begin(), query.end());
  return {std::move(train), std::move(query)};
}

inline PairedDataset subset(const PairedDataset& ds, const std::vector<Index>& idx) {
  PairedDataset out;
  out.modalities.reserve(ds.modalities.size());
  for (const Matrix& x : ds.modalities) {
    Matrix sub(x.rows(), static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) sub.col(static_cast<Index>(j)) = x.col(idx[j]);
    out.modalities.push_back(std::move(sub));
  }
  out.labels.resize(ds.labels.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j)
    out.labels.col(static_cast<Index>(j)) = ds.labels.col(idx[j]);
  if (!ds.names.empty()) {
    out.names.reserve(idx.size());
    for (Index i : idx) out.names.push_back(ds.names[static_cast<std::size_t>(i)]);
  }
  return out;
}

inline std::pair<PairedDataset, PairedDataset> split(const PairedDataset& ds,
                                                     const SplitSpec& spec) {
  const auto [train_idx, query_idx] = split_indices(ds.sample_count(), spec);
  return {subset(ds, train_idx), subset(ds, query_idx)};
}

// Synthetic paired-modality data: one latent Gaussian center per class per
// modality, samples scattered around their class center with the given noise
// scale. cross_noise > 0 relabels that fraction of samples (in expectation)
// to a uniformly chosen different class, leaving features untouched. Draw
// order is fixed (centers, then per-sample noise across modalities, then
// label flips), so every seed maps to exactly one dataset.
inline PairedDataset synth_multimodal(Index classes, Index per_class,
                                      const std::vector<Index>& dims, double noise,
                                      double cross_noise, std::uint64_t seed) {
  if (classes < 1 || per_class < 1) throw InvalidDataError("classes and per_class must be positive");
  if (dims.empty()) throw InvalidDataError("need at least one modality dimension");
  for (Index d : dims)
    if (d < 1) throw InvalidDataError("modality dimensions must be positive");
  if (noise < 0.0 || cross_noise < 0.0 || cross_noise > 1.0)
    throw InvalidDataError("noise must be >= 0 and cross_noise in [0, 1]");

  const Index n = classes * per_class;
  Rng rng(seed);
  std::vector<Matrix> centers;
  centers.reserve(dims.size());
  for (Index d : dims) centers.push_back(normal_matrix(d, classes, rng));

  PairedDataset ds;
  for (Index d : dims) ds.modalities.emplace_back(d, n);
  ds.labels = Matrix::Zero(classes, n);
  ds.names.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const Index cls = j / per_class;
    for (std::size_t m = 0; m < dims.size(); ++m) {
      Vector eps(dims[m]);
      for (Index i = 0; i < dims[m]; ++i) eps(i) = standard_normal(rng);
      ds.modalities[m].col(j) = centers[m].col(cls) + noise * eps;
    }
    ds.labels(cls, j) = 1.0;
    char buf[24];
    std::snprintf(buf, sizeof(buf), "s%06lld", static_cast<long long>(j));
    ds.names.emplace_back(buf);
  }
  if (cross_noise > 0.0 && classes > 1) {
    for (Index j = 0; j < n; ++j) {
      if (uniform_real(rng) >= cross_noise) continue;
      const Index cls = j / per_class;
      Index other = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(classes - 1)));
      if (other >= cls) ++other;
      ds.labels.col(j).setZero();
      ds.labels(other, j) = 1.0;
    }
  }
  return ds;
}

}  // namespace dsh
