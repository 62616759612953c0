#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "autoids/binning.hpp"
#include "autoids/common.hpp"
#include "autoids/error.hpp"
#include "autoids/learner_spec.hpp"
#include "autoids/parallel.hpp"
#include "autoids/rng.hpp"

namespace autoids {

// L2 leaf regularization, fixed for all boosting families
inline constexpr double kBoostLambda = 1.0;

// GOSS rates for the leaf-wise booster
inline constexpr double kGossTopRate = 0.2;
inline constexpr double kGossOtherRate = 0.1;

struct RegNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // leaf weight
  double gain = 0.0;   // split gain, kept for importances
  std::uint32_t count = 0;

  bool is_leaf() const { return feature < 0; }
};

struct RegTree {
  std::vector<RegNode> nodes;

  double value_for(const double* x) const {
    std::size_t at = 0;
    while (!nodes[at].is_leaf())
      at = static_cast<std::size_t>(x[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left
                                                                                : nodes[at].right);
    return nodes[at].value;
  }
};

// Multiclass softmax booster: per round and per class one regression tree
// fit to gradient/hessian statistics. Class scores start at zero, so an
// empty model predicts the uniform distribution.
struct BoostModel {
  int n_classes = 0;
  double learning_rate = 0.1;
  int n_rounds = 0;
  std::vector<RegTree> trees;  // round-major: trees[round * K + class]
};

inline void softmax_row(const double* scores, double* out, std::size_t k) {
  double mx = scores[0];
  for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, scores[c]);
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    out[c] = std::exp(scores[c] - mx);
    sum += out[c];
  }
  for (std::size_t c = 0; c < k; ++c) out[c] /= sum;
}

// gradient of softmax cross-entropy: p_j - 1{j == y}
inline void softmax_gradient(const double* prob, int label, double* grad, std::size_t k) {
  for (std::size_t c = 0; c < k; ++c) grad[c] = prob[c] - (static_cast<int>(c) == label ? 1.0 : 0.0);
}

// diagonal hessian of softmax cross-entropy: p_j (1 - p_j)
inline void softmax_hessian(const double* prob, double* hess, std::size_t k) {
  for (std::size_t c = 0; c < k; ++c) hess[c] = prob[c] * (1.0 - prob[c]);
}

inline double leaf_weight(double grad_sum, double hess_sum) {
  return -grad_sum / (hess_sum + kBoostLambda);
}

inline double split_gain(double gl, double hl, double gr, double hr, double gamma) {
  const double g = gl + gr, h = hl + hr;
  return 0.5 * (gl * gl / (hl + kBoostLambda) + gr * gr / (hr + kBoostLambda) -
                g * g / (h + kBoostLambda)) -
         gamma;
}

namespace detail {

struct GbtParams {
  int n_rounds = 275;
  double learning_rate = 0.5;
  int max_depth = 27;
  double gamma = 0.0;       // RGBT split penalty
  double subsample = 1.0;   // RGBT row fraction
  int num_leaves = 0;       // LGBT leaf cap (0 = depth-wise)
  int min_child_samples = 1;
  int oblivious_depth = 0;  // OGBT level count (0 = not oblivious)
  bool goss = false;        // LGBT one-side sampling
};

inline GbtParams gbt_params_from_spec(const LearnerSpec& spec) {
  GbtParams p;
  p.n_rounds = static_cast<int>(spec.get_int("n_estimators", 275));
  p.learning_rate = spec.get_real("learning_rate", 0.5);
  switch (spec.family) {
    case Family::RGBT:
      p.max_depth = static_cast<int>(spec.get_int("max_depth", 27));
      p.gamma = spec.get_real("gamma", 2.5);
      p.subsample = spec.get_real("subsample", 0.75);
      break;
    case Family::LGBT:
      p.max_depth = static_cast<int>(spec.get_int("max_depth", 27));
      p.num_leaves = static_cast<int>(spec.get_int("num_leaves", 1050));
      p.min_child_samples = static_cast<int>(spec.get_int("min_child_samples", 30));
      p.goss = true;
      break;
    case Family::OGBT:
      p.oblivious_depth = static_cast<int>(spec.get_int("depth", 7));
      break;
    default: throw ConfigError("gbt fit requires a boosting family");
  }
  return p;
}

// gradient/hessian pairs per sample for one class, with GOSS weights folded in
struct GradSlice {
  const double* grad = nullptr;    // stride K
  const double* hess = nullptr;    // stride K
  const double* weight = nullptr;  // per row, may be null
  std::size_t stride = 1;
};

struct GbtBestSplit {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
  int split_code = -1;
  bool valid() const { return feature >= 0; }
};

// histogram split finder shared by the three growth policies
class GbtSplitter {
 public:
  GbtSplitter(const BinnedColumns& bins, std::size_t d) : bins_(bins), d_(d) {
    std::size_t max_codes = 1;
    for (std::size_t f = 0; f < d; ++f)
      max_codes = std::max(max_codes, static_cast<std::size_t>(bins.n_codes(f)));
    gsum_.resize(max_codes);
    hsum_.resize(max_codes);
    cnt_.resize(max_codes);
  }

  // best split over all features for rows [begin, end)
  GbtBestSplit best_split(const std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                          const GradSlice& gh, double g_total, double h_total, double gamma,
                          int min_child) {
    GbtBestSplit best;
    for (std::size_t f = 0; f < d_; ++f) {
      const auto* codes = bins_.column(f);
      const FeatureBins& fb = bins_.feature[f];
      int min_code = fb.n_codes, max_code = -1;
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t r = rows[i];
        const int c = codes[r];
        const double w = gh.weight ? gh.weight[r] : 1.0;
        gsum_[static_cast<std::size_t>(c)] += gh.grad[r * gh.stride] * w;
        hsum_[static_cast<std::size_t>(c)] += gh.hess[r * gh.stride] * w;
        cnt_[static_cast<std::size_t>(c)]++;
        min_code = std::min(min_code, c);
        max_code = std::max(max_code, c);
      }
      if (max_code > min_code) {
        double gl = 0.0, hl = 0.0;
        std::size_t nl = 0;
        int prev = -1;
        const std::size_t n = end - begin;
        for (int c = min_code; c <= max_code; ++c) {
          if (cnt_[static_cast<std::size_t>(c)] == 0) continue;
          if (prev >= 0 && nl >= static_cast<std::size_t>(min_child) &&
              n - nl >= static_cast<std::size_t>(min_child)) {
            const double gain = split_gain(gl, hl, g_total - gl, h_total - hl, gamma);
            if (gain > 1e-12 && (!best.valid() || gain > best.gain)) {
              best.gain = gain;
              best.feature = static_cast<std::int32_t>(f);
              best.threshold = fb.threshold_between(prev, c);
              best.split_code = prev;
            }
          }
          gl += gsum_[static_cast<std::size_t>(c)];
          hl += hsum_[static_cast<std::size_t>(c)];
          nl += cnt_[static_cast<std::size_t>(c)];
          prev = c;
        }
      }
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t c = codes[rows[i]];
        gsum_[c] = 0.0;
        hsum_[c] = 0.0;
        cnt_[c] = 0;
      }
    }
    return best;
  }

  const BinnedColumns& bins() const { return bins_; }

 private:
  const BinnedColumns& bins_;
  std::size_t d_;
  std::vector<double> gsum_, hsum_;
  std::vector<std::uint32_t> cnt_;
};

inline void sum_grad_hess(const std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                          const GradSlice& gh, double& g, double& h) {
  g = 0.0;
  h = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t r = rows[i];
    const double w = gh.weight ? gh.weight[r] : 1.0;
    g += gh.grad[r * gh.stride] * w;
    h += gh.hess[r * gh.stride] * w;
  }
}

// depth-wise growth (RGBT)
inline RegTree grow_depthwise(GbtSplitter& splitter, std::vector<std::size_t>& rows,
                              const GradSlice& gh, const GbtParams& params) {
  RegTree tree;
  struct Item {
    std::size_t begin, end;
    int depth;
    std::size_t node;
  };
  std::vector<Item> stack;

  auto make_node = [&](std::size_t begin, std::size_t end) {
    double g, h;
    sum_grad_hess(rows, begin, end, gh, g, h);
    RegNode node;
    node.count = static_cast<std::uint32_t>(end - begin);
    node.value = leaf_weight(g, h);
    tree.nodes.push_back(node);
    return tree.nodes.size() - 1;
  };

  stack.push_back({0, rows.size(), 0, make_node(0, rows.size())});
  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    const std::size_t n = item.end - item.begin;
    if (item.depth >= params.max_depth || n < 2) continue;
    double g, h;
    sum_grad_hess(rows, item.begin, item.end, gh, g, h);
    const GbtBestSplit best =
        splitter.best_split(rows, item.begin, item.end, gh, g, h, params.gamma, 1);
    if (!best.valid()) continue;

    const auto* codes = splitter.bins().column(static_cast<std::size_t>(best.feature));
    const auto it = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(item.begin),
                                   rows.begin() + static_cast<std::ptrdiff_t>(item.end),
                                   [&](std::size_t r) { return codes[r] <= best.split_code; });
    const std::size_t mid = static_cast<std::size_t>(it - rows.begin());

    const std::size_t left = make_node(item.begin, mid);
    const std::size_t right = make_node(mid, item.end);
    tree.nodes[item.node].feature = best.feature;
    tree.nodes[item.node].threshold = best.threshold;
    tree.nodes[item.node].gain = best.gain;
    tree.nodes[item.node].left = static_cast<std::int32_t>(left);
    tree.nodes[item.node].right = static_cast<std::int32_t>(right);
    stack.push_back({mid, item.end, item.depth + 1, right});
    stack.push_back({item.begin, mid, item.depth + 1, left});
  }
  return tree;
}

// leaf-wise growth, best-gain leaf first (LGBT)
inline RegTree grow_leafwise(GbtSplitter& splitter, std::vector<std::size_t>& rows,
                             const GradSlice& gh, const GbtParams& params) {
  RegTree tree;
  struct Open {
    std::size_t begin, end;
    int depth;
    std::size_t node;
    GbtBestSplit best;
  };
  std::vector<Open> open;

  auto make_leaf = [&](std::size_t begin, std::size_t end, int depth) {
    double g, h;
    sum_grad_hess(rows, begin, end, gh, g, h);
    RegNode node;
    node.count = static_cast<std::uint32_t>(end - begin);
    node.value = leaf_weight(g, h);
    tree.nodes.push_back(node);
    const std::size_t id = tree.nodes.size() - 1;
    Open o{begin, end, depth, id, {}};
    if (depth < params.max_depth && end - begin >= 2)
      o.best = splitter.best_split(rows, begin, end, gh, g, h, 0.0, params.min_child_samples);
    open.push_back(o);
    return id;
  };

  make_leaf(0, rows.size(), 0);
  int n_leaves = 1;
  while (n_leaves < params.num_leaves) {
    // best-gain open leaf; ties fall to the earliest-created one
    std::size_t pick = open.size();
    for (std::size_t i = 0; i < open.size(); ++i) {
      if (!open[i].best.valid()) continue;
      if (pick == open.size() || open[i].best.gain > open[pick].best.gain) pick = i;
    }
    if (pick == open.size()) break;
    const Open chosen = open[pick];
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));

    const auto* codes = splitter.bins().column(static_cast<std::size_t>(chosen.best.feature));
    const auto it = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(chosen.begin),
                                   rows.begin() + static_cast<std::ptrdiff_t>(chosen.end),
                                   [&](std::size_t r) { return codes[r] <= chosen.best.split_code; });
    const std::size_t mid = static_cast<std::size_t>(it - rows.begin());

    tree.nodes[chosen.node].feature = chosen.best.feature;
    tree.nodes[chosen.node].threshold = chosen.best.threshold;
    tree.nodes[chosen.node].gain = chosen.best.gain;
    const std::size_t left = make_leaf(chosen.begin, mid, chosen.depth + 1);
    tree.nodes[chosen.node].left = static_cast<std::int32_t>(left);
    const std::size_t right = make_leaf(mid, chosen.end, chosen.depth + 1);
    tree.nodes[chosen.node].right = static_cast<std::int32_t>(right);
    ++n_leaves;
  }
  return tree;
}

// depth-synchronous oblivious growth: one (feature, threshold) per level (OGBT)
inline RegTree grow_oblivious(GbtSplitter& splitter, std::vector<std::size_t>& rows,
                              const GradSlice& gh, const GbtParams& params) {
  RegTree tree;
  struct Range {
    std::size_t begin, end;
    std::size_t node;
  };

  auto make_node = [&](std::size_t begin, std::size_t end) {
    double g, h;
    sum_grad_hess(rows, begin, end, gh, g, h);
    RegNode node;
    node.count = static_cast<std::uint32_t>(end - begin);
    node.value = leaf_weight(g, h);
    tree.nodes.push_back(node);
    return tree.nodes.size() - 1;
  };

  std::vector<Range> level;
  level.push_back({0, rows.size(), make_node(0, rows.size())});

  std::vector<double> cut_gain, gsum, hsum;
  for (int depth = 0; depth < params.oblivious_depth; ++depth) {
    // shared candidate: evaluate every (feature, cut code) against all leaves
    const std::size_t d = splitter.bins().feature.size();
    double best_total = 0.0;
    std::int32_t best_feature = -1;
    int best_code = -1;
    for (std::size_t f = 0; f < d; ++f) {
      const FeatureBins& fb = splitter.bins().feature[f];
      const int n_codes = fb.n_codes;
      if (n_codes < 2) continue;
      const auto* codes = splitter.bins().column(f);
      // per-leaf histograms, then prefix-scan over each leaf's occupied span
      cut_gain.assign(static_cast<std::size_t>(n_codes - 1), 0.0);
      gsum.assign(static_cast<std::size_t>(n_codes), 0.0);
      hsum.assign(static_cast<std::size_t>(n_codes), 0.0);
      for (const Range& leaf : level) {
        if (leaf.end - leaf.begin < 2) continue;
        int min_code = n_codes, max_code = -1;
        double gt = 0.0, ht = 0.0;
        for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
          const std::size_t r = rows[i];
          const double w = gh.weight ? gh.weight[r] : 1.0;
          const int c = codes[r];
          const double g = gh.grad[r * gh.stride] * w;
          const double h = gh.hess[r * gh.stride] * w;
          gsum[static_cast<std::size_t>(c)] += g;
          hsum[static_cast<std::size_t>(c)] += h;
          gt += g;
          ht += h;
          min_code = std::min(min_code, c);
          max_code = std::max(max_code, c);
        }
        if (max_code > min_code) {
          double gl = 0.0, hl = 0.0;
          for (int c = min_code; c < max_code; ++c) {
            gl += gsum[static_cast<std::size_t>(c)];
            hl += hsum[static_cast<std::size_t>(c)];
            cut_gain[static_cast<std::size_t>(c)] += split_gain(gl, hl, gt - gl, ht - hl, 0.0);
          }
        }
        for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
          const std::size_t c = codes[rows[i]];
          gsum[c] = 0.0;
          hsum[c] = 0.0;
        }
      }
      for (int c = 0; c + 1 < n_codes; ++c) {
        if (cut_gain[static_cast<std::size_t>(c)] > best_total + 1e-12) {
          best_total = cut_gain[static_cast<std::size_t>(c)];
          best_feature = static_cast<std::int32_t>(f);
          best_code = c;
        }
      }
    }
    if (best_feature < 0) break;

    const FeatureBins& fb = splitter.bins().feature[static_cast<std::size_t>(best_feature)];
    const double threshold = fb.threshold_between(best_code, best_code + 1);
    const auto* codes = splitter.bins().column(static_cast<std::size_t>(best_feature));

    std::vector<Range> next;
    next.reserve(level.size() * 2);
    for (const Range& leaf : level) {
      const auto it = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(leaf.begin),
                                     rows.begin() + static_cast<std::ptrdiff_t>(leaf.end),
                                     [&](std::size_t r) { return codes[r] <= best_code; });
      const std::size_t mid = static_cast<std::size_t>(it - rows.begin());
      const std::size_t left = make_node(leaf.begin, mid);
      const std::size_t right = make_node(mid, leaf.end);
      tree.nodes[leaf.node].feature = best_feature;
      tree.nodes[leaf.node].threshold = threshold;
      tree.nodes[leaf.node].gain = best_total / static_cast<double>(level.size());
      tree.nodes[leaf.node].left = static_cast<std::int32_t>(left);
      tree.nodes[leaf.node].right = static_cast<std::int32_t>(right);
      next.push_back({leaf.begin, mid, left});
      next.push_back({mid, leaf.end, right});
    }
    level = std::move(next);
  }
  return tree;
}

}  // namespace detail

// Shared driver for the three boosting families. Per round: softmax
// probabilities, per-class gradient/hessian statistics, optional row
// sampling, then one regression tree per class. Scores accumulate with
// learning-rate shrinkage. Optionally records the training-loss curve
// (entry r = mean cross-entropy after r rounds).
inline BoostModel fit_gbt(const Matrix& x, const std::vector<int>& y, int n_classes,
                          const LearnerSpec& spec, std::uint64_t seed,
                          std::vector<double>* loss_curve = nullptr) {
  if (n_classes < 2) throw TrainError("boosting requires at least two classes");
  if (x.rows() == 0) throw TrainError("empty training set");
  validate_spec(spec);
  const detail::GbtParams params = detail::gbt_params_from_spec(spec);

  const std::size_t n = x.rows();
  const std::size_t k = static_cast<std::size_t>(n_classes);
  const auto bins = detail::bin_columns(x, 256, 256);

  BoostModel model;
  model.n_classes = n_classes;
  model.learning_rate = params.learning_rate;
  model.n_rounds = params.n_rounds;
  model.trees.resize(static_cast<std::size_t>(params.n_rounds) * k);

  Matrix scores(n, k, 0.0);
  Matrix prob(n, k);
  Matrix grad(n, k);
  Matrix hess(n, k);
  std::vector<double> weights;
  std::vector<std::size_t> selected, scratch;

  auto mean_loss = [&]() {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      loss -= std::log(std::max(prob(i, static_cast<std::size_t>(y[i])), 1e-300));
    return loss / static_cast<double>(n);
  };

  for (int round = 0; round < params.n_rounds; ++round) {
    parallel_for(n, [&](std::size_t i) {
      softmax_row(scores.row(i), prob.row(i), k);
      softmax_gradient(prob.row(i), y[i], grad.row(i), k);
      softmax_hessian(prob.row(i), hess.row(i), k);
    });
    if (loss_curve) loss_curve->push_back(mean_loss());
    if (!all_finite(grad.data().data(), grad.data().size()) ||
        !all_finite(hess.data().data(), hess.data().size()))
      throw TrainError("non-finite gradient at round " + std::to_string(round));

    // row selection for this round
    Rng round_rng(derive_seed(seed, 0xB0057ULL + static_cast<std::uint64_t>(round)));
    weights.clear();
    selected.clear();
    if (spec.family == Family::RGBT && params.subsample < 1.0) {
      const auto m = static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n)));
      round_rng.sample_without_replacement(n, std::max<std::size_t>(m, 1), selected, scratch);
      std::sort(selected.begin(), selected.end());
    } else if (params.goss) {
      const auto top_k = static_cast<std::size_t>(kGossTopRate * static_cast<double>(n));
      const auto rest_k = static_cast<std::size_t>(kGossOtherRate * static_cast<double>(n));
      if (top_k >= 1 && rest_k >= 1) {
        std::vector<std::size_t> order = iota_index(n);
        std::vector<double> magnitude(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < k; ++c) magnitude[i] += std::fabs(grad(i, c));
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          if (magnitude[a] != magnitude[b]) return magnitude[a] > magnitude[b];
          return a < b;
        });
        selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_k));
        std::vector<std::size_t> sampled;
        round_rng.sample_without_replacement(n - top_k, rest_k, sampled, scratch);
        weights.assign(n, 1.0);
        const double amplify = (1.0 - kGossTopRate) / kGossOtherRate;
        for (const std::size_t s : sampled) {
          const std::size_t r = order[top_k + s];
          selected.push_back(r);
          weights[r] = amplify;
        }
        std::sort(selected.begin(), selected.end());
      }
    }
    if (selected.empty()) selected = iota_index(n);

    // one tree per class on the shared row sample
    parallel_for(k, [&](std::size_t c) {
      detail::GradSlice gh;
      gh.grad = grad.data().data() + c;
      gh.hess = hess.data().data() + c;
      gh.stride = k;
      gh.weight = weights.empty() ? nullptr : weights.data();

      detail::GbtSplitter splitter(bins, x.cols());
      std::vector<std::size_t> rows = selected;
      RegTree tree;
      if (params.oblivious_depth > 0)
        tree = detail::grow_oblivious(splitter, rows, gh, params);
      else if (params.num_leaves > 0)
        tree = detail::grow_leafwise(splitter, rows, gh, params);
      else
        tree = detail::grow_depthwise(splitter, rows, gh, params);
      model.trees[static_cast<std::size_t>(round) * k + c] = std::move(tree);
    });

    for (std::size_t c = 0; c < k; ++c) {
      const RegTree& tree = model.trees[static_cast<std::size_t>(round) * k + c];
      parallel_for(n, [&](std::size_t i) {
        scores(i, c) += params.learning_rate * tree.value_for(x.row(i));
      });
    }
  }
  if (loss_curve) {
    parallel_for(n, [&](std::size_t i) { softmax_row(scores.row(i), prob.row(i), k); });
    loss_curve->push_back(mean_loss());
  }
  return model;
}

// softmax over accumulated class scores
inline Matrix boost_predict_proba(const BoostModel& model, const Matrix& x) {
  const std::size_t k = static_cast<std::size_t>(model.n_classes);
  Matrix proba(x.rows(), k);
  parallel_for(x.rows(), [&](std::size_t i) {
    thread_local std::vector<double> scores;
    scores.assign(k, 0.0);
    for (std::size_t t = 0; t < model.trees.size(); ++t)
      scores[t % k] += model.learning_rate * model.trees[t].value_for(x.row(i));
    softmax_row(scores.data(), proba.row(i), k);
  });
  return proba;
}

// split gains summed per feature over all trees, normalized to sum 1
inline std::vector<double> boost_importances(const BoostModel& model, std::size_t d) {
  std::vector<double> imp(d, 0.0);
  for (const RegTree& tree : model.trees)
    for (const RegNode& node : tree.nodes)
      if (!node.is_leaf()) imp[static_cast<std::size_t>(node.feature)] += std::max(node.gain, 0.0);
  double total = 0.0;
  for (const double v : imp) total += v;
  if (total > 0.0)
    for (double& v : imp) v /= total;
  return imp;
}

}  // namespace autoids
