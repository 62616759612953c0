#pragma once

#include <cmath>
#include <cstddef>

#include "autoids/learner_spec.hpp"

namespace autoids {

// Gini impurity: 1 - sum p_i^2
inline double gini(const double* p, std::size_t n) {
  double sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) sumsq += p[i] * p[i];
  return 1.0 - sumsq;
}

// Entropy in bits: -sum p_i log2 p_i, with 0 log 0 = 0
inline double entropy(const double* p, std::size_t n) {
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (p[i] > 0.0) h -= p[i] * std::log2(p[i]);
  return h;
}

template <typename Vec>
double gini(const Vec& p) {
  return gini(p.data(), p.size());
}

template <typename Vec>
double entropy(const Vec& p) {
  return entropy(p.data(), p.size());
}

// impurity of a class-count vector (total = sum counts)
inline double impurity_of_counts(SplitCriterion criterion, const double* counts, std::size_t k,
                                 double total) {
  if (total <= 0.0) return 0.0;
  if (criterion == SplitCriterion::gini) {
    double sumsq = 0.0;
    for (std::size_t i = 0; i < k; ++i) sumsq += counts[i] * counts[i];
    return 1.0 - sumsq / (total * total);
  }
  double h = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (counts[i] > 0.0) {
      const double p = counts[i] / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

}  // namespace autoids
