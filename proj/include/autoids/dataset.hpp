#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "autoids/common.hpp"
#include "autoids/error.hpp"
#include "autoids/rng.hpp"

namespace autoids {

// ---------------------------------------------------------------------------
// domain types
// ---------------------------------------------------------------------------

struct RawTable {
  std::vector<std::string> header;             // trimmed, unique
  std::vector<std::vector<std::string>> rows;  // |header| cells each
  std::string label_column;                    // empty when the table is unlabeled
};

struct EncodedDataset {
  Matrix features;                       // n x d, all finite
  std::vector<int> labels;               // class ids in 0..K-1
  std::vector<std::string> class_names;  // length K, first-appearance order
  std::vector<std::string> feature_names;
  int n_classes = 0;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
};

struct SplitIndices {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  double test_fraction = 0.0;
};

struct FoldAssignment {
  std::vector<int> fold_of;  // per sample, 0..k-1
  int k = 0;

  std::vector<std::size_t> fold_members(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] == fold) out.push_back(i);
    return out;
  }
};

struct ClassDistribution {
  std::vector<std::size_t> counts;  // per class
  double average = 0.0;             // (sum counts) / K
  double threshold = 0.0;           // average / 2
};

// ---------------------------------------------------------------------------
// CSV parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// one RFC-4180-style record; returns false on EOF with nothing read
inline bool read_record(std::istream& in, std::vector<std::string>& cells, std::size_t& line_no) {
  cells.clear();
  std::string cell;
  bool in_quotes = false;
  bool any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          cell.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        cell.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      ++line_no;
      cells.push_back(cell);
      return true;
    } else if (c == '\n') {
      ++line_no;
      cells.push_back(cell);
      return true;
    } else {
      cell.push_back(c);
    }
  }
  if (!any) return false;
  ++line_no;
  cells.push_back(cell);
  return true;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

enum class CellKind { finite, missing, pos_inf, neg_inf, bad };

// accepted non-finite spellings (case-insensitive): nan, inf, infinity,
// +inf, -inf, +infinity, -infinity, empty cell
inline CellKind parse_cell(const std::string& raw, double& out) {
  const std::string t = trim(raw);
  if (t.empty()) return CellKind::missing;
  const std::string l = lower(t);
  if (l == "nan" || l == "+nan" || l == "-nan") return CellKind::missing;
  if (l == "inf" || l == "+inf" || l == "infinity" || l == "+infinity") return CellKind::pos_inf;
  if (l == "-inf" || l == "-infinity") return CellKind::neg_inf;
  std::size_t pos = 0;
  try {
    out = std::stod(t, &pos);
  } catch (const std::exception&) {
    return CellKind::bad;
  }
  if (pos != t.size()) return CellKind::bad;
  if (std::isnan(out)) return CellKind::missing;
  if (std::isinf(out)) return out > 0 ? CellKind::pos_inf : CellKind::neg_inf;
  return CellKind::finite;
}

}  // namespace detail

// Parses a CSV file into header + rows with no label requirement.
// Header names are whitespace-trimmed and must be unique.
inline RawTable parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);

  RawTable table;
  std::size_t line_no = 0;
  std::vector<std::string> cells;
  if (!detail::read_record(in, cells, line_no)) throw DataError("empty file: " + path);

  for (const auto& name : cells) table.header.push_back(detail::trim(name));
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    auto [it, inserted] = seen.emplace(table.header[i], i);
    if (!inserted)
      throw DataError("duplicate header name '" + table.header[i] + "' (columns " +
                      std::to_string(it->second + 1) + " and " + std::to_string(i + 1) + ")");
  }

  const std::size_t width = table.header.size();
  while (detail::read_record(in, cells, line_no)) {
    if (cells.size() == 1 && cells[0].empty()) continue;  // trailing blank line
    if (cells.size() != width)
      throw DataError("ragged row at line " + std::to_string(line_no) + ": expected " +
                      std::to_string(width) + " cells, got " + std::to_string(cells.size()));
    table.rows.push_back(cells);
  }
  return table;
}

// CSV ingest with a required label column.
inline RawTable load_csv(const std::string& path, const std::string& label_column) {
  RawTable table = parse_csv(path);
  const std::string wanted = detail::trim(label_column);
  bool found = false;
  for (const auto& name : table.header) found = found || name == wanted;
  if (!found) throw DataError("label column '" + wanted + "' not found in " + path);
  if (table.rows.empty()) throw DataError("no data rows in " + path);
  table.label_column = wanted;
  return table;
}

// ---------------------------------------------------------------------------
// sanitize + encode
// ---------------------------------------------------------------------------

namespace detail {

struct ParsedColumn {
  std::vector<double> values;   // finite entries valid, others placeholder
  std::vector<CellKind> kinds;  // per row
};

// NaN/empty -> median of finite values; +inf -> finite max; -inf -> finite min
inline void impute_column(ParsedColumn& col, const std::string& name) {
  std::vector<double> finite;
  finite.reserve(col.values.size());
  for (std::size_t i = 0; i < col.values.size(); ++i)
    if (col.kinds[i] == CellKind::finite) finite.push_back(col.values[i]);
  if (finite.empty()) throw DataError("column '" + name + "' has no finite values");

  std::sort(finite.begin(), finite.end());
  const std::size_t m = finite.size();
  const double median = (m % 2 == 1) ? finite[m / 2] : 0.5 * (finite[m / 2 - 1] + finite[m / 2]);
  const double lo = finite.front();
  const double hi = finite.back();

  for (std::size_t i = 0; i < col.values.size(); ++i) {
    switch (col.kinds[i]) {
      case CellKind::missing: col.values[i] = median; break;
      case CellKind::pos_inf: col.values[i] = hi; break;
      case CellKind::neg_inf: col.values[i] = lo; break;
      default: break;
    }
  }
}

}  // namespace detail

// Sanitizes the feature columns of a table (no label handling).
// Column order follows `feature_names`.
inline Matrix sanitize_features(const RawTable& table, const std::vector<std::string>& feature_names) {
  std::unordered_map<std::string, std::size_t> col_of;
  for (std::size_t j = 0; j < table.header.size(); ++j) col_of[table.header[j]] = j;

  const std::size_t n = table.rows.size();
  Matrix out(n, feature_names.size());
  for (std::size_t f = 0; f < feature_names.size(); ++f) {
    const auto it = col_of.find(feature_names[f]);
    if (it == col_of.end()) throw DataError("missing feature column '" + feature_names[f] + "'");
    const std::size_t j = it->second;

    detail::ParsedColumn col;
    col.values.resize(n);
    col.kinds.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      col.kinds[i] = detail::parse_cell(table.rows[i][j], col.values[i]);
      if (col.kinds[i] == detail::CellKind::bad)
        throw DataError("unparseable cell '" + table.rows[i][j] + "' at row " + std::to_string(i + 2) +
                        ", column '" + feature_names[f] + "'");
    }
    detail::impute_column(col, feature_names[f]);
    for (std::size_t i = 0; i < n; ++i) out(i, f) = col.values[i];
  }
  return out;
}

// Full encode: sanitized features plus labels mapped to ids in
// first-appearance order.
inline EncodedDataset sanitize_encode(const RawTable& table) {
  if (table.label_column.empty()) throw DataError("table has no label column");
  std::size_t label_idx = table.header.size();
  for (std::size_t j = 0; j < table.header.size(); ++j)
    if (table.header[j] == table.label_column) label_idx = j;
  if (label_idx == table.header.size())
    throw DataError("label column '" + table.label_column + "' not found");
  if (table.rows.empty()) throw DataError("table has no rows");

  EncodedDataset ds;
  for (std::size_t j = 0; j < table.header.size(); ++j)
    if (j != label_idx) ds.feature_names.push_back(table.header[j]);
  if (ds.feature_names.empty()) throw DataError("table has no feature columns");

  ds.features = sanitize_features(table, ds.feature_names);

  std::unordered_map<std::string, int> label_id;
  ds.labels.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const std::string name = detail::trim(row[label_idx]);
    auto [it, inserted] = label_id.emplace(name, static_cast<int>(ds.class_names.size()));
    if (inserted) ds.class_names.push_back(name);
    ds.labels.push_back(it->second);
  }
  ds.n_classes = static_cast<int>(ds.class_names.size());
  return ds;
}

// ---------------------------------------------------------------------------
// stratified splitting
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<std::size_t>> indices_by_class(const std::vector<int>& labels,
                                                              int n_classes) {
  std::vector<std::vector<std::size_t>> per_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i)
    per_class[static_cast<std::size_t>(labels[i])].push_back(i);
  return per_class;
}

}  // namespace detail

// Per-class shuffle with a seed-derived stream, then proportional test
// draw. Per-class test share lands within one sample of the target.
inline SplitIndices stratified_split(const EncodedDataset& ds, double test_fraction,
                                     std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must be in (0, 1)");

  auto per_class = detail::indices_by_class(ds.labels, ds.n_classes);
  SplitIndices split;
  split.test_fraction = test_fraction;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    auto& idx = per_class[c];
    if (idx.size() < 2)
      throw DataError("class '" + ds.class_names[c] + "' has a single sample; cannot stratify");
    Rng rng(derive_seed(seed, 0x5350ULL * 1000 + c));  // split stream per class
    rng.shuffle(idx);
    const std::size_t n_test =
        static_cast<std::size_t>(std::floor(static_cast<double>(idx.size()) * test_fraction + 0.5));
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < n_test ? split.test_idx : split.train_idx).push_back(idx[i]);
  }
  std::sort(split.train_idx.begin(), split.train_idx.end());
  std::sort(split.test_idx.begin(), split.test_idx.end());
  return split;
}

// Per-class shuffle, then round-robin fold assignment; per-class fold
// sizes balanced within one.
inline FoldAssignment stratified_kfold(const std::vector<int>& labels, int n_classes, int k,
                                       std::uint64_t seed) {
  if (k < 2) throw ConfigError("fold count must be >= 2");
  auto per_class = detail::indices_by_class(labels, n_classes);
  FoldAssignment folds;
  folds.k = k;
  folds.fold_of.assign(labels.size(), -1);
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    auto& idx = per_class[c];
    if (idx.size() < static_cast<std::size_t>(k))
      throw DataError("class id " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                      " samples, fewer than k=" + std::to_string(k));
    Rng rng(derive_seed(seed, 0x464cULL * 1000 + c));  // fold stream per class
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i)
      folds.fold_of[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return folds;
}

inline FoldAssignment stratified_kfold(const EncodedDataset& ds, int k, std::uint64_t seed) {
  return stratified_kfold(ds.labels, ds.n_classes, k, seed);
}

// Counts per class over the given index view; average and the
// half-average threshold drive imbalance detection.
inline ClassDistribution class_distribution(const EncodedDataset& ds,
                                            const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw DataError("class_distribution over an empty index list");
  ClassDistribution dist;
  dist.counts.assign(static_cast<std::size_t>(ds.n_classes), 0);
  for (const std::size_t i : idx) dist.counts[static_cast<std::size_t>(ds.labels[i])]++;
  std::size_t total = 0;
  for (const std::size_t c : dist.counts) total += c;
  dist.average = static_cast<double>(total) / static_cast<double>(ds.n_classes);
  dist.threshold = dist.average / 2.0;
  return dist;
}

}  // namespace autoids
