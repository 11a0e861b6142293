#pragma once

#include "dsh/codec.hpp"
#include "dsh/types.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

// Hamming ranking and mean-average-precision evaluation for the cross-modal
// retrieval tasks (image queries text, text queries image).

namespace dsh {

enum class Task { i2t, t2i };

inline const char* task_name(Task t) { return t == Task::i2t ? "I2T" : "T2I"; }

struct QuerySet {
  PackedCodes codes;
  Matrix labels;  // c x n_query, 0/1
  Task task = Task::i2t;
};

struct ApResult {
  std::vector<double> per_query;  // AP per query, in [0,1]
  double mean = 0.0;              // arithmetic mean over all queries
  Index cutoff = 0;               // ranking depth used
};

// Database indices by ascending Hamming distance to the query; ties broken by
// ascending index. Counting sort over the r+1 possible distances keeps the
// ordering deterministic.
inline std::vector<Index> hamming_rank(const std::uint64_t* query, Index code_length,
                                       const PackedCodes& db) {
  if (code_length != db.code_length)
    throw std::invalid_argument("hamming_rank: query code length " + std::to_string(code_length) +
                                " does not match database " + std::to_string(db.code_length));
  const Index words = db.words_per_code();
  std::vector<Index> counts(static_cast<std::size_t>(code_length) + 2, 0);
  std::vector<int> dist(static_cast<std::size_t>(db.count));
  for (Index j = 0; j < db.count; ++j) {
    dist[static_cast<std::size_t>(j)] = hamming_distance(query, db.code(j), words);
    ++counts[static_cast<std::size_t>(dist[static_cast<std::size_t>(j)]) + 1];
  }
  for (std::size_t d = 1; d < counts.size(); ++d) counts[d] += counts[d - 1];
  std::vector<Index> order(static_cast<std::size_t>(db.count));
  for (Index j = 0; j < db.count; ++j)
    order[static_cast<std::size_t>(counts[static_cast<std::size_t>(
        dist[static_cast<std::size_t>(j)])]++)] = j;
  return order;
}

inline std::vector<Index> hamming_rank(const PackedCodes& queries, Index query,
                                       const PackedCodes& db) {
  return hamming_rank(queries.code(query), queries.code_length, db);
}

// Average precision of a ranked 0/1 relevance list truncated at `cutoff`:
// (1/l) sum_{m=1..cutoff} P(m) rel(m), with P(m) the precision of the top m
// and l the number of relevant items in the top cutoff; 0 when l = 0.
inline double average_precision(const std::vector<char>& ranked_relevance, Index cutoff) {
  if (cutoff < 0 || cutoff > static_cast<Index>(ranked_relevance.size()))
    throw std::invalid_argument("average_precision: cutoff " + std::to_string(cutoff) +
                                " exceeds ranking length " +
                                std::to_string(ranked_relevance.size()));
  Index hits = 0;
  double sum = 0.0;
  for (Index m = 0; m < cutoff; ++m) {
    if (ranked_relevance[static_cast<std::size_t>(m)]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(m + 1);
    }
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

// Mean AP over all queries. A database item is relevant to a query when their
// label vectors share at least one active category; queries without any
// relevant item contribute AP = 0. cutoff <= 0 means the full database.
template <typename Scalar>
ApResult mean_ap(const PackedCodes& query_codes, const MatrixX<Scalar>& query_labels,
                 const PackedCodes& db_codes, const MatrixX<Scalar>& db_labels,
                 Index cutoff = 0) {
  if (query_codes.code_length != db_codes.code_length)
    throw std::invalid_argument("mean_ap: query/database code lengths differ");
  if (query_labels.cols() != query_codes.count || db_labels.cols() != db_codes.count)
    throw std::invalid_argument("mean_ap: label counts do not match code counts");
  if (query_labels.rows() != db_labels.rows())
    throw std::invalid_argument("mean_ap: query/database category counts differ");
  ApResult result;
  result.cutoff = cutoff <= 0 ? db_codes.count : cutoff;
  if (result.cutoff > db_codes.count)
    throw std::invalid_argument("mean_ap: cutoff exceeds database size");
  result.per_query.reserve(static_cast<std::size_t>(query_codes.count));
  std::vector<char> relevance(static_cast<std::size_t>(db_codes.count));
  for (Index q = 0; q < query_codes.count; ++q) {
    const std::vector<Index> order = hamming_rank(query_codes, q, db_codes);
    for (Index pos = 0; pos < db_codes.count; ++pos) {
      const Index j = order[static_cast<std::size_t>(pos)];
      relevance[static_cast<std::size_t>(pos)] =
          query_labels.col(q).dot(db_labels.col(j)) > Scalar(0) ? 1 : 0;
    }
    result.per_query.push_back(average_precision(relevance, result.cutoff));
  }
  double total = 0.0;
  for (double ap : result.per_query) total += ap;
  result.mean = result.per_query.empty() ? 0.0 : total / double(result.per_query.size());
  return result;
}

template <typename Scalar>
ApResult mean_ap(const QuerySet& queries, const PackedCodes& db_codes,
                 const MatrixX<Scalar>& db_labels, Index cutoff = 0) {
  return mean_ap(queries.codes, MatrixX<Scalar>(queries.labels.template cast<Scalar>()), db_codes,
                 db_labels, cutoff);
}

// ----------------------------------------------------------------------------
// MAP report table, one row per (task, code length).

struct MapReportRow {
  Task task = Task::i2t;
  Index code_length = 0;
  Index query_count = 0;
  double map = 0.0;
};

inline std::string format_map_text(const std::vector<MapReportRow>& rows) {
  std::string out = "task  bits  queries  MAP\n";
  char line[96];
  for (const auto& row : rows) {
    std::snprintf(line, sizeof line, "%-4s  %4lld  %7lld  %.4f\n", task_name(row.task),
                  static_cast<long long>(row.code_length), static_cast<long long>(row.query_count),
                  row.map);
    out += line;
  }
  return out;
}

inline std::string format_map_csv(const std::vector<MapReportRow>& rows) {
  std::string out = "task,bits,queries,map\n";
  char line[96];
  for (const auto& row : rows) {
    std::snprintf(line, sizeof line, "%s,%lld,%lld,%.17g\n", task_name(row.task),
                  static_cast<long long>(row.code_length), static_cast<long long>(row.query_count),
                  row.map);
    out += line;
  }
  return out;
}

}  // namespace dsh
