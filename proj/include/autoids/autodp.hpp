#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "autoids/common.hpp"
#include "autoids/dataset.hpp"
#include "autoids/error.hpp"
#include "autoids/parallel.hpp"
#include "autoids/rng.hpp"
#include "autoids/tvae.hpp"

namespace autoids {

struct MinorityClass {
  int class_id = 0;
  std::size_t count = 0;
  std::size_t deficit = 0;  // ceil(threshold) - count
};

struct ImbalanceReport {
  std::vector<MinorityClass> minority_classes;

  bool balanced() const { return minority_classes.empty(); }
};

// Classes strictly below the half-average threshold, with how many
// synthetic samples each needs to reach it.
inline ImbalanceReport detect_imbalance(const ClassDistribution& dist) {
  ImbalanceReport report;
  const auto target = static_cast<std::size_t>(std::ceil(dist.threshold));
  for (std::size_t c = 0; c < dist.counts.size(); ++c) {
    if (static_cast<double>(dist.counts[c]) < dist.threshold) {
      report.minority_classes.push_back(
          {static_cast<int>(c), dist.counts[c], target - dist.counts[c]});
    }
  }
  return report;
}

// Synthesis target: the half-average threshold by default; the full
// class average behind the switch.
enum class BalanceTarget { half_average, average };

struct ClassBalanceSummary {
  int class_id = 0;
  std::size_t before = 0;
  std::size_t after = 0;
  bool jitter_fallback = false;  // single-sample class resampled with jitter
};

struct BalancedView {
  Matrix features;         // original training rows first, then synthetic
  std::vector<int> labels;
  std::size_t original_count = 0;
  double average = 0.0;
  double threshold = 0.0;
  BalanceTarget target = BalanceTarget::half_average;
  std::vector<ClassBalanceSummary> per_class;
};

// Raises every minority class of the training view to the synthesis
// target. Original rows are preserved verbatim; synthetic rows are
// appended grouped by ascending class id.
inline BalancedView balance(const EncodedDataset& ds, const std::vector<std::size_t>& train_idx,
                            const TvaeConfig& cfg, BalanceTarget target = BalanceTarget::half_average) {
  if (train_idx.empty()) throw DataError("balance: empty training view");

  const ClassDistribution dist = class_distribution(ds, train_idx);
  const ImbalanceReport report = detect_imbalance(dist);
  const auto goal = static_cast<std::size_t>(
      std::ceil(target == BalanceTarget::half_average ? dist.threshold : dist.average));

  BalancedView view;
  view.features = ds.features.take_rows(train_idx);
  view.labels.reserve(train_idx.size());
  for (const std::size_t i : train_idx) view.labels.push_back(ds.labels[i]);
  view.original_count = train_idx.size();
  view.average = dist.average;
  view.threshold = dist.threshold;
  view.target = target;
  for (std::size_t c = 0; c < dist.counts.size(); ++c)
    view.per_class.push_back({static_cast<int>(c), dist.counts[c], dist.counts[c], false});

  if (report.balanced()) return view;

  // per-feature std over the training view, for the one-sample fallback
  std::vector<double> column_std(ds.features.cols(), 0.0);
  {
    const std::size_t n = view.original_count;
    for (std::size_t j = 0; j < view.features.cols(); ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += view.features(i, j);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = view.features(i, j) - mean;
        var += e * e;
      }
      column_std[j] = std::sqrt(var / static_cast<double>(n));
    }
  }

  // one generator per minority class, each on its own stream
  std::vector<Matrix> synthetic(report.minority_classes.size());
  parallel_for(report.minority_classes.size(), [&](std::size_t m) {
    const MinorityClass& minority = report.minority_classes[m];
    const std::size_t need = goal > minority.count ? goal - minority.count : 0;
    if (need == 0) return;

    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < view.original_count; ++i)
      if (view.labels[i] == minority.class_id) members.push_back(i);
    if (members.empty())
      throw DataError("class id " + std::to_string(minority.class_id) +
                      " has no rows in the training view");
    const Matrix rows = view.features.take_rows(members);

    if (rows.rows() == 1) {
      // TVAE needs at least two rows; jitter-resample the singleton
      Rng rng(derive_seed(cfg.seed, 0x1A77ULL * 4096 + static_cast<std::uint64_t>(minority.class_id)));
      Matrix synth(need, rows.cols());
      for (std::size_t i = 0; i < need; ++i)
        for (std::size_t j = 0; j < rows.cols(); ++j)
          synth(i, j) = rows(0, j) + 1e-6 * column_std[j] * rng.normal();
      synthetic[m] = std::move(synth);
    } else {
      TvaeConfig class_cfg = cfg;
      class_cfg.seed = derive_seed(cfg.seed, 0x7C1A55ULL * 64 + static_cast<std::uint64_t>(minority.class_id));
      const TvaeModel model = train_tvae(rows, class_cfg);
      synthetic[m] = sample_synthetic(model, need);
    }
  });

  for (std::size_t m = 0; m < report.minority_classes.size(); ++m) {
    const MinorityClass& minority = report.minority_classes[m];
    const Matrix& synth = synthetic[m];
    if (synth.rows() == 0) continue;
    Matrix grown(view.features.rows() + synth.rows(), view.features.cols());
    std::copy(view.features.data().begin(), view.features.data().end(), grown.data().begin());
    std::copy(synth.data().begin(), synth.data().end(),
              grown.data().begin() + static_cast<std::ptrdiff_t>(view.features.data().size()));
    view.features = std::move(grown);
    view.labels.insert(view.labels.end(), synth.rows(), minority.class_id);

    auto& summary = view.per_class[static_cast<std::size_t>(minority.class_id)];
    summary.after = summary.before + synth.rows();
    summary.jitter_fallback = minority.count == 1;
  }
  return view;
}

}  // namespace autoids
