#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "autoids/binning.hpp"
#include "autoids/common.hpp"
#include "autoids/error.hpp"
#include "autoids/impurity.hpp"
#include "autoids/learner_spec.hpp"
#include "autoids/parallel.hpp"
#include "autoids/rng.hpp"

namespace autoids {

// Internal nodes route x[feature] <= threshold to the left child.
// Every node keeps its class distribution so importances can be derived
// from the stored structure alone.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t count = 0;
  std::vector<double> dist;  // length K, sums to 1

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(const double* x) const {
    std::size_t at = 0;
    while (!nodes[at].is_leaf())
      at = static_cast<std::size_t>(x[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left
                                                                                : nodes[at].right);
    return nodes[at];
  }
};

struct ClassForest {
  SplitCriterion criterion = SplitCriterion::gini;
  std::vector<Tree> trees;
};

// bootstrap draw: n indices with replacement
inline std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i)
    rows[i] = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
  return rows;
}

namespace detail {

struct ClassTreeParams {
  int max_depth = 20;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  SplitCriterion criterion = SplitCriterion::gini;
  std::size_t feature_subset = 0;  // 0 = all features
  bool random_thresholds = false;  // ET-style uniform cuts
};

struct BestSplit {
  double decrease = -1.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
  int split_code = -1;  // code-space routing for the partition step; -1 = by value
  bool valid() const { return feature >= 0; }
};

class ClassTreeBuilder {
 public:
  ClassTreeBuilder(const Matrix& x, const BinnedColumns& bins, const std::vector<int>& y,
                   std::size_t k, const ClassTreeParams& params, Rng& rng)
      : x_(x), bins_(bins), y_(y), k_(k), params_(params), rng_(rng) {
    std::size_t max_codes = 1;
    for (std::size_t f = 0; f < x.cols(); ++f)
      max_codes = std::max(max_codes, static_cast<std::size_t>(bins.n_codes(f)));
    hist_.assign(max_codes * k_, 0);
    hist_count_.assign(max_codes, 0);
    left_.resize(k_);
    right_.resize(k_);
    node_counts_.resize(k_);
  }

  Tree build(std::vector<std::size_t> rows) {
    Tree tree;
    rows_ = std::move(rows);
    grow(tree, 0, rows_.size(), 0);
    return tree;
  }

 private:
  std::size_t grow(Tree& tree, std::size_t begin, std::size_t end, int depth) {
    const std::size_t n = end - begin;
    std::fill(node_counts_.begin(), node_counts_.end(), 0.0);
    for (std::size_t i = begin; i < end; ++i)
      node_counts_[static_cast<std::size_t>(y_[rows_[i]])] += 1.0;

    const std::size_t node_id = tree.nodes.size();
    tree.nodes.emplace_back();
    {
      TreeNode& node = tree.nodes.back();
      node.count = static_cast<std::uint32_t>(n);
      node.dist.resize(k_);
      for (std::size_t c = 0; c < k_; ++c) node.dist[c] = node_counts_[c] / static_cast<double>(n);
    }

    bool pure = false;
    for (std::size_t c = 0; c < k_; ++c) pure = pure || node_counts_[c] == static_cast<double>(n);
    if (pure || depth >= params_.max_depth ||
        n < static_cast<std::size_t>(params_.min_samples_split))
      return node_id;

    const BestSplit best = find_best_split(begin, end);
    if (!best.valid()) return node_id;

    const auto* codes = bins_.column(static_cast<std::size_t>(best.feature));
    auto it = (best.split_code >= 0)
                  ? std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                   rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                   [&](std::size_t r) { return codes[r] <= best.split_code; })
                  : std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                   rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                   [&](std::size_t r) {
                                     return x_(r, static_cast<std::size_t>(best.feature)) <=
                                            best.threshold;
                                   });
    const std::size_t mid = static_cast<std::size_t>(it - rows_.begin());

    tree.nodes[node_id].feature = best.feature;
    tree.nodes[node_id].threshold = best.threshold;
    const std::size_t left_id = grow(tree, begin, mid, depth + 1);
    tree.nodes[node_id].left = static_cast<std::int32_t>(left_id);
    const std::size_t right_id = grow(tree, mid, end, depth + 1);
    tree.nodes[node_id].right = static_cast<std::int32_t>(right_id);
    return node_id;
  }

  BestSplit find_best_split(std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    const std::size_t d = x_.cols();
    const double parent_imp = impurity_of_counts(params_.criterion, node_counts_.data(), k_,
                                                 static_cast<double>(n));

    // candidate features, ascending for deterministic tie-breaks
    features_.clear();
    if (params_.feature_subset == 0 || params_.feature_subset >= d) {
      for (std::size_t f = 0; f < d; ++f) features_.push_back(f);
    } else {
      rng_.sample_without_replacement(d, params_.feature_subset, features_, feat_scratch_);
      std::sort(features_.begin(), features_.end());
    }

    BestSplit best;
    for (const std::size_t f : features_) {
      if (params_.random_thresholds)
        scan_random_cut(f, begin, end, parent_imp, best);
      else
        scan_all_cuts(f, begin, end, parent_imp, best);
    }
    return best;
  }

  // exact scan over occupied codes; thresholds midway between adjacent
  // occupied codes, so candidates are the node-local value midpoints
  void scan_all_cuts(std::size_t f, std::size_t begin, std::size_t end, double parent_imp,
                     BestSplit& best) {
    const auto* codes = bins_.column(f);
    const FeatureBins& fb = bins_.feature[f];
    const std::size_t n = end - begin;

    int min_code = fb.n_codes, max_code = -1;
    for (std::size_t i = begin; i < end; ++i) {
      const int c = codes[rows_[i]];
      hist_[static_cast<std::size_t>(c) * k_ + static_cast<std::size_t>(y_[rows_[i]])]++;
      hist_count_[static_cast<std::size_t>(c)]++;
      min_code = std::min(min_code, c);
      max_code = std::max(max_code, c);
    }
    if (max_code > min_code) {
      std::fill(left_.begin(), left_.end(), 0.0);
      double n_left = 0.0;
      int prev = -1;
      const double msl = static_cast<double>(params_.min_samples_leaf);
      for (int c = min_code; c <= max_code; ++c) {
        if (hist_count_[static_cast<std::size_t>(c)] == 0) continue;
        if (prev >= 0 && n_left >= msl && static_cast<double>(n) - n_left >= msl) {
          for (std::size_t cls = 0; cls < k_; ++cls) right_[cls] = node_counts_[cls] - left_[cls];
          const double n_right = static_cast<double>(n) - n_left;
          const double dec =
              parent_imp -
              (n_left / static_cast<double>(n)) *
                  impurity_of_counts(params_.criterion, left_.data(), k_, n_left) -
              (n_right / static_cast<double>(n)) *
                  impurity_of_counts(params_.criterion, right_.data(), k_, n_right);
          if (dec > best.decrease) {
            best.decrease = dec;
            best.feature = static_cast<std::int32_t>(f);
            best.threshold = fb.threshold_between(prev, c);
            best.split_code = prev;
          }
        }
        const std::size_t base = static_cast<std::size_t>(c) * k_;
        for (std::size_t cls = 0; cls < k_; ++cls) left_[cls] += hist_[base + cls];
        n_left += hist_count_[static_cast<std::size_t>(c)];
        prev = c;
      }
    }
    // sparse reset of touched entries
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t c = codes[rows_[i]];
      hist_count_[c] = 0;
      std::fill(hist_.begin() + static_cast<std::ptrdiff_t>(c * k_),
                hist_.begin() + static_cast<std::ptrdiff_t>(c * k_ + k_), 0u);
    }
  }

  // ET: one uniform cut in [node min, node max) per candidate feature
  void scan_random_cut(std::size_t f, std::size_t begin, std::size_t end, double parent_imp,
                       BestSplit& best) {
    const std::size_t n = end - begin;
    double lo = x_(rows_[begin], f), hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double v = x_(rows_[i], f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) return;
    const double t = rng_.uniform(lo, hi);

    std::fill(left_.begin(), left_.end(), 0.0);
    double n_left = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      if (x_(rows_[i], f) <= t) {
        left_[static_cast<std::size_t>(y_[rows_[i]])] += 1.0;
        n_left += 1.0;
      }
    }
    const double n_right = static_cast<double>(n) - n_left;
    const double msl = static_cast<double>(params_.min_samples_leaf);
    if (n_left < msl || n_right < msl || n_left == 0.0 || n_right == 0.0) return;
    for (std::size_t cls = 0; cls < k_; ++cls) right_[cls] = node_counts_[cls] - left_[cls];
    const double dec = parent_imp -
                       (n_left / static_cast<double>(n)) *
                           impurity_of_counts(params_.criterion, left_.data(), k_, n_left) -
                       (n_right / static_cast<double>(n)) *
                           impurity_of_counts(params_.criterion, right_.data(), k_, n_right);
    if (dec > best.decrease) {
      best.decrease = dec;
      best.feature = static_cast<std::int32_t>(f);
      best.threshold = t;
      best.split_code = -1;
    }
  }

  const Matrix& x_;
  const BinnedColumns& bins_;
  const std::vector<int>& y_;
  std::size_t k_;
  ClassTreeParams params_;
  Rng& rng_;

  std::vector<std::size_t> rows_;
  std::vector<std::uint32_t> hist_;        // code x class counts, kept zeroed
  std::vector<std::uint32_t> hist_count_;  // per-code totals, kept zeroed
  std::vector<double> left_, right_, node_counts_;
  std::vector<std::size_t> features_, feat_scratch_;
};

inline ClassTreeParams class_params_from_spec(const LearnerSpec& spec) {
  ClassTreeParams p;
  p.max_depth = static_cast<int>(spec.get_int("max_depth", 27));
  p.min_samples_split = static_cast<int>(spec.get_int("min_samples_split", 2));
  p.min_samples_leaf = static_cast<int>(spec.get_int("min_samples_leaf", 1));
  p.criterion = spec.criterion();
  return p;
}

}  // namespace detail

// Fits DT / RF / ET. DT grows a single tree on the full sample with every
// feature in play; RF adds bootstrap resamples and per-node sqrt(d) feature
// subsets; ET keeps the full sample but randomizes cuts as well.
inline ClassForest fit_class_forest(const Matrix& x, const std::vector<int>& y, int n_classes,
                                    const LearnerSpec& spec, std::uint64_t seed) {
  if (x.rows() == 0) throw TrainError("empty training set");
  if (x.rows() != y.size()) throw TrainError("feature/label row mismatch");
  validate_spec(spec);

  const auto bins = detail::bin_columns(x, 10000, 256);
  detail::ClassTreeParams params = detail::class_params_from_spec(spec);

  int n_trees = 1;
  if (spec.family == Family::RF || spec.family == Family::ET) {
    n_trees = static_cast<int>(spec.get_int("n_estimators", 275));
    params.feature_subset =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));
    params.random_thresholds = spec.family == Family::ET;
  }
  const bool bootstrap = spec.family == Family::RF;

  ClassForest forest;
  forest.criterion = params.criterion;
  forest.trees.resize(static_cast<std::size_t>(n_trees));
  parallel_for(static_cast<std::size_t>(n_trees), [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> rows =
        bootstrap ? bootstrap_sample(x.rows(), rng) : iota_index(x.rows());
    detail::ClassTreeBuilder builder(x, bins, y, static_cast<std::size_t>(n_classes), params, rng);
    forest.trees[t] = builder.build(std::move(rows));
  });
  return forest;
}

// mean of per-tree leaf distributions; rows sum to 1
inline Matrix forest_predict_proba(const ClassForest& forest, const Matrix& x, int n_classes) {
  Matrix proba(x.rows(), static_cast<std::size_t>(n_classes));
  const double inv = 1.0 / static_cast<double>(forest.trees.size());
  parallel_for(x.rows(), [&](std::size_t i) {
    double* out = proba.row(i);
    for (const Tree& tree : forest.trees) {
      const TreeNode& leaf = tree.leaf_for(x.row(i));
      for (int c = 0; c < n_classes; ++c) out[c] += leaf.dist[static_cast<std::size_t>(c)] * inv;
    }
  });
  return proba;
}

// Weighted impurity decrease per feature, summed over every split of every
// tree in a fixed order, then normalized to sum 1.
inline std::vector<double> forest_importances(const ClassForest& forest, std::size_t d) {
  std::vector<double> imp(d, 0.0);
  for (const Tree& tree : forest.trees) {
    if (tree.nodes.empty()) continue;
    const double root_n = static_cast<double>(tree.nodes[0].count);
    for (const TreeNode& node : tree.nodes) {
      if (node.is_leaf()) continue;
      const TreeNode& l = tree.nodes[static_cast<std::size_t>(node.left)];
      const TreeNode& r = tree.nodes[static_cast<std::size_t>(node.right)];
      const double imp_node = forest.criterion == SplitCriterion::gini ? gini(node.dist)
                                                                       : entropy(node.dist);
      const double imp_l = forest.criterion == SplitCriterion::gini ? gini(l.dist) : entropy(l.dist);
      const double imp_r = forest.criterion == SplitCriterion::gini ? gini(r.dist) : entropy(r.dist);
      const double nl = static_cast<double>(l.count), nr = static_cast<double>(r.count);
      const double nn = static_cast<double>(node.count);
      const double dec = imp_node - (nl / nn) * imp_l - (nr / nn) * imp_r;
      imp[static_cast<std::size_t>(node.feature)] += (nn / root_n) * std::max(dec, 0.0);
    }
  }
  double total = 0.0;
  for (const double v : imp) total += v;
  if (total > 0.0)
    for (double& v : imp) v /= total;
  return imp;
}

}  // namespace autoids
