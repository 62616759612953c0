#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "autoids/common.hpp"
#include "autoids/dataset.hpp"
#include "autoids/error.hpp"
#include "autoids/learner.hpp"
#include "autoids/metrics.hpp"
#include "autoids/parallel.hpp"

namespace autoids {

struct CvScore {
  Family family = Family::DT;
  double mean_f1 = 0.0;
  std::vector<double> fold_f1;
  double mean_fit_seconds = 0.0;
};

struct FeatureSelection {
  std::vector<std::size_t> selected;  // importance-descending feature indices
  double cumulative = 0.0;
  double alpha = 0.9;
  bool all_features_fallback = false;  // no-split models forced selection of everything
};

// k-fold weighted F1 for one learner family on a training view, over a
// caller-supplied fold assignment
inline CvScore cross_validate_folds(const Matrix& x, const std::vector<int>& y, int n_classes,
                                    const LearnerSpec& spec, const FoldAssignment& folds,
                                    std::uint64_t seed) {
  const int k = folds.k;
  CvScore score;
  score.family = spec.family;
  score.fold_f1.assign(static_cast<std::size_t>(k), 0.0);
  std::vector<double> fold_seconds(static_cast<std::size_t>(k), 0.0);

  parallel_for(static_cast<std::size_t>(k), [&](std::size_t fold) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < y.size(); ++i)
      (folds.fold_of[i] == static_cast<int>(fold) ? test_rows : train_rows).push_back(i);

    const Matrix x_train = x.take_rows(train_rows);
    const Matrix x_test = x.take_rows(test_rows);
    std::vector<int> y_train, y_test;
    y_train.reserve(train_rows.size());
    y_test.reserve(test_rows.size());
    for (const std::size_t i : train_rows) y_train.push_back(y[i]);
    for (const std::size_t i : test_rows) y_test.push_back(y[i]);

    const auto start = std::chrono::steady_clock::now();
    const TrainedModel model =
        fit_model(x_train, y_train, n_classes, spec, derive_seed(seed, 0xCF01D0 + fold));
    fold_seconds[fold] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const MetricBlock metrics = compute_metrics(y_test, model.predict(x_test), n_classes);
    score.fold_f1[fold] = metrics.weighted_f1;
  });

  for (int fold = 0; fold < k; ++fold) {
    score.mean_f1 += score.fold_f1[static_cast<std::size_t>(fold)] / static_cast<double>(k);
    score.mean_fit_seconds += fold_seconds[static_cast<std::size_t>(fold)] / static_cast<double>(k);
  }
  return score;
}

inline CvScore cross_validate(const Matrix& x, const std::vector<int>& y, int n_classes,
                              const LearnerSpec& spec, int k, std::uint64_t seed) {
  return cross_validate_folds(x, y, n_classes, spec, stratified_kfold(y, n_classes, k, seed), seed);
}

// CV of all six families at their mid-range defaults, in family order
inline std::vector<CvScore> evaluate_families(const Matrix& x, const std::vector<int>& y,
                                              int n_classes, int k, std::uint64_t seed) {
  const auto& families = all_families();
  std::vector<CvScore> scores(families.size());
  parallel_for(families.size(), [&](std::size_t i) {
    scores[i] = cross_validate(x, y, n_classes, default_spec(families[i]), k,
                               derive_seed(seed, 0xFA400 + i));
  });
  return scores;
}

// Top three families by mean F1; ties fall to the faster fit, then to the
// fixed family order.
inline std::vector<Family> rank_learners(const std::vector<CvScore>& scores) {
  std::vector<char> seen(all_families().size(), 0);
  for (const CvScore& s : scores) {
    if (seen[static_cast<std::size_t>(s.family)])
      throw ConfigError("duplicate family " + family_name(s.family) + " in score list");
    seen[static_cast<std::size_t>(s.family)] = 1;
  }
  std::vector<std::size_t> order = iota_index(scores.size());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a].mean_f1 != scores[b].mean_f1) return scores[a].mean_f1 > scores[b].mean_f1;
    if (scores[a].mean_fit_seconds != scores[b].mean_fit_seconds)
      return scores[a].mean_fit_seconds < scores[b].mean_fit_seconds;
    return scores[a].family < scores[b].family;
  });
  std::vector<Family> top;
  for (std::size_t i = 0; i < 3 && i < order.size(); ++i) top.push_back(scores[order[i]].family);
  return top;
}

// elementwise mean, renormalized to sum 1 (all-zero inputs drop out)
inline std::vector<double> average_importances(const std::vector<double>& i1,
                                               const std::vector<double>& i2,
                                               const std::vector<double>& i3) {
  if (i1.size() != i2.size() || i2.size() != i3.size())
    throw DataError("average_importances: length mismatch");
  std::vector<double> avg(i1.size());
  double total = 0.0;
  for (std::size_t j = 0; j < avg.size(); ++j) {
    avg[j] = (i1[j] + i2[j] + i3[j]) / 3.0;
    total += avg[j];
  }
  if (total > 0.0)
    for (double& v : avg) v /= total;
  return avg;
}

// Shortest importance-descending prefix whose cumulative sum reaches
// alpha; the crossing feature is included. Ties order by lower index.
inline FeatureSelection select_features(const std::vector<double>& avg, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
  FeatureSelection sel;
  sel.alpha = alpha;

  double total = 0.0;
  for (const double v : avg) total += v;
  if (total <= 0.0) {
    // no-split models carry no signal; keep everything and flag it
    sel.selected = iota_index(avg.size());
    sel.cumulative = 0.0;
    sel.all_features_fallback = true;
    return sel;
  }

  std::vector<std::size_t> order = iota_index(avg.size());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (avg[a] != avg[b]) return avg[a] > avg[b];
    return a < b;
  });
  for (const std::size_t f : order) {
    if (avg[f] <= 0.0) break;
    sel.selected.push_back(f);
    sel.cumulative += avg[f];
    if (sel.cumulative >= alpha - 1e-12) break;
  }
  return sel;
}

// column projection in selection order; labels and names stay consistent
inline EncodedDataset project(const EncodedDataset& ds, const FeatureSelection& sel) {
  EncodedDataset out;
  out.labels = ds.labels;
  out.class_names = ds.class_names;
  out.n_classes = ds.n_classes;
  out.features = Matrix(ds.features.rows(), sel.selected.size());
  for (std::size_t j = 0; j < sel.selected.size(); ++j) {
    if (sel.selected[j] >= ds.features.cols())
      throw DataError("feature selection index out of range");
    out.feature_names.push_back(ds.feature_names[sel.selected[j]]);
    for (std::size_t i = 0; i < ds.features.rows(); ++i)
      out.features(i, j) = ds.features(i, sel.selected[j]);
  }
  return out;
}

// same projection for a bare matrix
inline Matrix project_columns(const Matrix& x, const std::vector<std::size_t>& selected) {
  Matrix out(x.rows(), selected.size());
  for (std::size_t j = 0; j < selected.size(); ++j) {
    if (selected[j] >= x.cols()) throw DataError("feature selection index out of range");
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) = x(i, selected[j]);
  }
  return out;
}

}  // namespace autoids
