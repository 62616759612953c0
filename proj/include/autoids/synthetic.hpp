#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "autoids/error.hpp"
#include "autoids/rng.hpp"

namespace autoids {

// Synthetic flow-record table: Gaussian class clusters over a block of
// informative columns, plus correlated and pure-noise columns, with a
// sprinkle of missing/non-finite cells. Used for demos and the test
// fixtures; heavily imbalanced by default.
struct SyntheticSpec {
  std::vector<std::size_t> class_counts = {10000, 6000, 2500, 1400, 100};  // 100:1 skew
  std::size_t n_features = 30;
  std::size_t n_informative = 12;
  double separation = 2.0;        // cluster spread between class centers
  double dirty_cell_rate = 0.002; // chance a cell becomes nan/inf/empty
  std::uint64_t seed = 7;
};

inline const std::vector<std::string>& synthetic_class_names() {
  static const std::vector<std::string> names = {"BENIGN", "DoS", "PortScan", "BruteForce",
                                                 "Infiltration", "Botnet", "WebAttack"};
  return names;
}

inline void write_synthetic_csv(const std::string& path, const SyntheticSpec& spec) {
  if (spec.class_counts.empty() || spec.class_counts.size() > synthetic_class_names().size())
    throw ConfigError("synthetic data supports 1.." +
                      std::to_string(synthetic_class_names().size()) + " classes");
  if (spec.n_informative > spec.n_features)
    throw ConfigError("n_informative cannot exceed n_features");

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");

  const std::size_t k = spec.class_counts.size();
  const std::size_t d = spec.n_features;
  Rng center_rng(derive_seed(spec.seed, 0xCE17));

  // class centers over the informative block
  std::vector<std::vector<double>> centers(k, std::vector<double>(spec.n_informative, 0.0));
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < spec.n_informative; ++j)
      centers[c][j] = center_rng.normal() * spec.separation;

  // redundant columns mix two informative ones
  const std::size_t n_redundant = (d - spec.n_informative) / 2;
  std::vector<std::pair<std::size_t, std::size_t>> mix(n_redundant);
  for (auto& m : mix) {
    m.first = static_cast<std::size_t>(
        center_rng.uniform_int(0, static_cast<std::int64_t>(spec.n_informative) - 1));
    m.second = static_cast<std::size_t>(
        center_rng.uniform_int(0, static_cast<std::int64_t>(spec.n_informative) - 1));
  }

  for (std::size_t j = 0; j < d; ++j) out << "feat_" << j << ",";
  out << "Label\n";

  // interleave classes deterministically so the file is not sorted by label
  std::vector<std::size_t> remaining = spec.class_counts;
  std::size_t total = 0;
  for (const std::size_t c : remaining) total += c;

  Rng row_rng(derive_seed(spec.seed, 0xD07A));
  Rng dirty_rng(derive_seed(spec.seed, 0xD187));
  std::vector<double> row(d);
  char buf[64];

  for (std::size_t emitted = 0; emitted < total; ++emitted) {
    // weighted pick over remaining counts keeps the interleave stable
    std::size_t pick = 0;
    {
      const std::size_t left = total - emitted;
      std::size_t target = static_cast<std::size_t>(
          row_rng.uniform_int(0, static_cast<std::int64_t>(left) - 1));
      for (std::size_t c = 0; c < k; ++c) {
        if (target < remaining[c]) {
          pick = c;
          break;
        }
        target -= remaining[c];
      }
    }
    remaining[pick]--;

    for (std::size_t j = 0; j < spec.n_informative; ++j)
      row[j] = centers[pick][j] + row_rng.normal();
    for (std::size_t j = 0; j < n_redundant; ++j)
      row[spec.n_informative + j] =
          0.6 * row[mix[j].first] - 0.4 * row[mix[j].second] + 0.3 * row_rng.normal();
    for (std::size_t j = spec.n_informative + n_redundant; j < d; ++j) row[j] = row_rng.normal();

    for (std::size_t j = 0; j < d; ++j) {
      if (dirty_rng.uniform() < spec.dirty_cell_rate) {
        switch (dirty_rng.uniform_int(0, 3)) {
          case 0: break;  // empty cell
          case 1: out << "NaN"; break;
          case 2: out << "Infinity"; break;
          default: out << "-inf"; break;
        }
      } else {
        std::snprintf(buf, sizeof buf, "%.6g", row[j]);
        out << buf;
      }
      out << ',';
    }
    out << synthetic_class_names()[pick] << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace autoids
