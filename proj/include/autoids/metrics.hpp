#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "autoids/error.hpp"

namespace autoids {

struct ClassMetrics {
  double precision = 0.0;  // TP/(TP+FP), 0 when undefined
  double recall = 0.0;     // TP/(TP+FN), 0 when undefined
  double f1 = 0.0;         // harmonic mean, 0 when both are 0
  std::size_t support = 0;
};

struct MetricBlock {
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [true][pred]
  double accuracy = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

inline MetricBlock compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                   int n_classes) {
  if (y_true.size() != y_pred.size() || y_true.empty())
    throw DataError("compute_metrics: label lists must be equal-length and non-empty");
  const std::size_t k = static_cast<std::size_t>(n_classes);

  MetricBlock block;
  block.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= n_classes || y_pred[i] < 0 || y_pred[i] >= n_classes)
      throw DataError("compute_metrics: label outside 0.." + std::to_string(n_classes - 1));
    block.confusion[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])]++;
  }

  block.per_class.resize(k);
  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = block.confusion[c][c];
    std::size_t fn = 0, fp = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != c) {
        fn += block.confusion[c][j];
        fp += block.confusion[j][c];
      }
    }
    correct += tp;
    ClassMetrics& m = block.per_class[c];
    m.support = tp + fn;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                          : 0.0;
  }
  const double total = static_cast<double>(y_true.size());
  block.accuracy = static_cast<double>(correct) / total;
  for (std::size_t c = 0; c < k; ++c) {
    const ClassMetrics& m = block.per_class[c];
    const double w = static_cast<double>(m.support) / total;
    block.weighted_precision += w * m.precision;
    block.weighted_recall += w * m.recall;
    block.weighted_f1 += w * m.f1;
    block.macro_precision += m.precision / static_cast<double>(k);
    block.macro_recall += m.recall / static_cast<double>(k);
    block.macro_f1 += m.f1 / static_cast<double>(k);
  }
  return block;
}

// relative error-rate improvement: (acc_new - acc_base) / (1 - acc_base)
inline double error_rate_reduction(double acc_new, double acc_base) {
  if (acc_base >= 1.0) throw ConfigError("error_rate_reduction undefined at baseline accuracy 1");
  return (acc_new - acc_base) / (1.0 - acc_base);
}

}  // namespace autoids
