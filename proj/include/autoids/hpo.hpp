#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "autoids/common.hpp"
#include "autoids/error.hpp"
#include "autoids/learner_spec.hpp"
#include "autoids/rng.hpp"

namespace autoids {

// ---------------------------------------------------------------------------
// search-space types
// ---------------------------------------------------------------------------

struct ContinuousParam {
  double lo = 0.0, hi = 1.0;
};
struct IntegerParam {
  std::int64_t lo = 0, hi = 1;
};
struct CategoricalParam {
  std::vector<std::string> choices;
};
using ParamSpec = std::variant<ContinuousParam, IntegerParam, CategoricalParam>;

struct SearchSpace {
  std::map<std::string, ParamSpec> params;
};

using ParamValue = std::variant<std::int64_t, double, std::string>;
using ParamConfig = std::map<std::string, ParamValue>;

struct Trial {
  ParamConfig config;
  double value = 0.0;  // objective, minimized; finite when ok
  bool ok = false;
};

struct TpeConfig {
  double gamma = 0.25;    // quantile fraction for the better group
  int n_startup = 10;     // random trials before the surrogate kicks in
  int n_candidates = 24;  // density-ratio-ranked draws per suggestion
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// trial splitting (better group / worse group)
// ---------------------------------------------------------------------------

// Lowest max(1, ceil(gamma * n)) trials form the better group; insertion
// order is kept within both groups.
inline std::pair<std::vector<Trial>, std::vector<Trial>> split_trials(
    const std::vector<Trial>& history, double gamma) {
  if (history.size() < 2) throw ConfigError("split_trials needs at least 2 trials");
  const std::size_t n = history.size();
  const std::size_t n_better = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(n))));

  std::vector<std::size_t> order = iota_index(n);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return history[a].value < history[b].value; });
  std::vector<bool> better(n, false);
  for (std::size_t i = 0; i < n_better && i < n; ++i) better[order[i]] = true;

  std::pair<std::vector<Trial>, std::vector<Trial>> groups;
  for (std::size_t i = 0; i < n; ++i)
    (better[i] ? groups.first : groups.second).push_back(history[i]);
  return groups;
}

// ---------------------------------------------------------------------------
// Parzen estimators
// ---------------------------------------------------------------------------

namespace hpo_detail {

inline double normal_cdf(double t) { return 0.5 * (1.0 + std::erf(t / 1.4142135623730951)); }

// Gaussian mixture over observations, truncated-normalized to [lo, hi].
// Bandwidth per observation: max(nearest-neighbor spacing, range/min(100, n)).
struct NumericKde {
  std::vector<double> centers;
  std::vector<double> bandwidths;
  double lo = 0.0, hi = 1.0;
  bool integer = false;

  static NumericKde build(std::vector<double> values, double lo, double hi, bool integer) {
    NumericKde kde;
    kde.lo = lo;
    kde.hi = hi;
    kde.integer = integer;
    kde.centers = std::move(values);
    const std::size_t n = kde.centers.size();
    const double floor_bw =
        (hi - lo) / static_cast<double>(std::min<std::size_t>(100, std::max<std::size_t>(n, 1)));
    std::vector<double> sorted = kde.centers;
    std::sort(sorted.begin(), sorted.end());
    kde.bandwidths.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double spacing = 0.0;
      if (n > 1) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), kde.centers[i]);
        const std::size_t pos = static_cast<std::size_t>(it - sorted.begin());
        spacing = std::numeric_limits<double>::infinity();
        if (pos > 0) spacing = std::min(spacing, kde.centers[i] - sorted[pos - 1]);
        if (pos + 1 < n) spacing = std::min(spacing, sorted[pos + 1] - kde.centers[i]);
        if (!std::isfinite(spacing)) spacing = 0.0;
      }
      kde.bandwidths[i] = std::max(spacing, floor_bw);
    }
    return kde;
  }

  double logdensity(double x) const {
    const double at = integer ? std::nearbyint(x) : x;
    if (at < lo || at > hi) throw ConfigError("kde evaluation point outside bounds");
    double density = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double bw = bandwidths[i];
      const double z = (at - centers[i]) / bw;
      const double norm =
          normal_cdf((hi - centers[i]) / bw) - normal_cdf((lo - centers[i]) / bw);
      density += std::exp(-0.5 * z * z) / (2.5066282746310002 * bw * std::max(norm, 1e-12));
    }
    density /= static_cast<double>(centers.size());
    return std::log(std::max(density, 1e-300));
  }

  double sample(Rng& rng) const {
    const std::size_t i = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(centers.size()) - 1));
    double draw = 0.0;
    for (int attempt = 0; attempt < 100; ++attempt) {
      draw = rng.normal(centers[i], bandwidths[i]);
      if (draw >= lo && draw <= hi) break;
      draw = std::clamp(draw, lo, hi);
    }
    if (integer) draw = std::clamp(std::nearbyint(draw), static_cast<double>(lo), static_cast<double>(hi));
    return draw;
  }
};

// add-one smoothed frequencies over the choice list
struct CategoricalKde {
  std::vector<std::string> choices;
  std::vector<double> prob;

  static CategoricalKde build(const std::vector<std::string>& values,
                              const std::vector<std::string>& choices) {
    CategoricalKde kde;
    kde.choices = choices;
    kde.prob.assign(choices.size(), 0.0);
    for (const auto& v : values) {
      bool found = false;
      for (std::size_t c = 0; c < choices.size(); ++c) {
        if (choices[c] == v) {
          kde.prob[c] += 1.0;
          found = true;
        }
      }
      if (!found) throw ConfigError("observed category '" + v + "' not in choices");
    }
    const double denom = static_cast<double>(values.size() + choices.size());
    for (double& p : kde.prob) p = (p + 1.0) / denom;
    return kde;
  }

  double logdensity(const std::string& x) const {
    for (std::size_t c = 0; c < choices.size(); ++c)
      if (choices[c] == x) return std::log(prob[c]);
    throw ConfigError("category '" + x + "' not in choices");
  }

  std::string sample(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t c = 0; c < choices.size(); ++c) {
      acc += prob[c];
      if (u < acc) return choices[c];
    }
    return choices.back();
  }
};

}  // namespace hpo_detail

// single-parameter density queries (numeric and categorical forms)
inline double kde_logdensity(const std::vector<double>& values, const ParamSpec& spec, double x) {
  if (values.empty()) throw ConfigError("kde over an empty observation list");
  if (const auto* c = std::get_if<ContinuousParam>(&spec))
    return hpo_detail::NumericKde::build(values, c->lo, c->hi, false).logdensity(x);
  if (const auto* i = std::get_if<IntegerParam>(&spec))
    return hpo_detail::NumericKde::build(values, static_cast<double>(i->lo),
                                         static_cast<double>(i->hi), true)
        .logdensity(x);
  throw ConfigError("numeric kde over a categorical parameter");
}

inline double kde_logdensity(const std::vector<std::string>& values, const ParamSpec& spec,
                             const std::string& x) {
  if (values.empty()) throw ConfigError("kde over an empty observation list");
  const auto* cat = std::get_if<CategoricalParam>(&spec);
  if (!cat) throw ConfigError("categorical kde over a numeric parameter");
  return hpo_detail::CategoricalKde::build(values, cat->choices).logdensity(x);
}

// ---------------------------------------------------------------------------
// suggestion and optimization
// ---------------------------------------------------------------------------

namespace hpo_detail {

inline ParamValue random_value(const ParamSpec& spec, Rng& rng) {
  if (const auto* c = std::get_if<ContinuousParam>(&spec)) return rng.uniform(c->lo, c->hi);
  if (const auto* i = std::get_if<IntegerParam>(&spec)) return rng.uniform_int(i->lo, i->hi);
  const auto& cat = std::get<CategoricalParam>(spec);
  return cat.choices[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(cat.choices.size()) - 1))];
}

inline double numeric_of(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return static_cast<double>(std::get<std::int64_t>(v));
}

// per-parameter estimator pair for both trial groups
struct ParamModel {
  bool categorical = false;
  NumericKde better_num, worse_num;
  CategoricalKde better_cat, worse_cat;
  bool has_worse = false;
  double uniform_density = 1.0;  // prior over the domain
  std::size_t n_better = 0, n_worse = 0;
};

// Mixture density blended with one uniform prior pseudo-observation.
// Keeps the ratio from exploding in regions neither group has visited.
inline double blended_logdensity(const NumericKde& kde, std::size_t n, double uniform_density,
                                 double x) {
  if (n == 0) return std::log(uniform_density);
  const double mixture = std::exp(kde.logdensity(x));
  return std::log((static_cast<double>(n) * mixture + uniform_density) /
                  static_cast<double>(n + 1));
}

}  // namespace hpo_detail

// Warmup draws uniformly; afterwards candidates are sampled from the
// better-group densities and ranked by the density log-ratio.
inline ParamConfig suggest(const SearchSpace& space, const std::vector<Trial>& history,
                           const TpeConfig& cfg) {
  std::vector<Trial> ok_trials;
  for (const Trial& t : history)
    if (t.ok && std::isfinite(t.value)) ok_trials.push_back(t);

  Rng rng(derive_seed(cfg.seed, 0x5000003ULL + history.size()));

  ParamConfig config;
  if (ok_trials.size() < static_cast<std::size_t>(cfg.n_startup) || ok_trials.size() < 2) {
    for (const auto& [name, spec] : space.params) config[name] = hpo_detail::random_value(spec, rng);
    return config;
  }

  const auto [better, worse] = split_trials(ok_trials, cfg.gamma);
  std::map<std::string, hpo_detail::ParamModel> models;
  for (const auto& [name, spec] : space.params) {
    hpo_detail::ParamModel model;
    model.n_better = better.size();
    model.n_worse = worse.size();
    if (const auto* cat = std::get_if<CategoricalParam>(&spec)) {
      model.categorical = true;
      std::vector<std::string> vb, vw;
      for (const Trial& t : better) vb.push_back(std::get<std::string>(t.config.at(name)));
      for (const Trial& t : worse) vw.push_back(std::get<std::string>(t.config.at(name)));
      model.better_cat = hpo_detail::CategoricalKde::build(vb, cat->choices);
      model.worse_cat = hpo_detail::CategoricalKde::build(vw, cat->choices);
    } else {
      double lo, hi;
      bool integer;
      if (const auto* c = std::get_if<ContinuousParam>(&spec)) {
        lo = c->lo;
        hi = c->hi;
        integer = false;
      } else {
        const auto& i = std::get<IntegerParam>(spec);
        lo = static_cast<double>(i.lo);
        hi = static_cast<double>(i.hi);
        integer = true;
      }
      model.uniform_density = integer ? 1.0 / (hi - lo + 1.0) : 1.0 / (hi - lo);
      std::vector<double> vb, vw;
      for (const Trial& t : better) vb.push_back(hpo_detail::numeric_of(t.config.at(name)));
      for (const Trial& t : worse) vw.push_back(hpo_detail::numeric_of(t.config.at(name)));
      model.better_num = hpo_detail::NumericKde::build(vb, lo, hi, integer);
      if (!vw.empty()) {
        model.worse_num = hpo_detail::NumericKde::build(vw, lo, hi, integer);
        model.has_worse = true;
      }
    }
    models.emplace(name, std::move(model));
  }

  double best_score = -std::numeric_limits<double>::infinity();
  ParamConfig best_config;
  for (int c = 0; c < cfg.n_candidates; ++c) {
    ParamConfig candidate;
    double score = 0.0;
    for (const auto& [name, spec] : space.params) {
      const auto& model = models.at(name);
      if (model.categorical) {
        // add-one smoothing already regularizes both groups
        const std::string v = model.better_cat.sample(rng);
        score += model.better_cat.logdensity(v) - model.worse_cat.logdensity(v);
        candidate[name] = v;
      } else {
        const double v = model.better_num.sample(rng);
        score += hpo_detail::blended_logdensity(model.better_num, model.n_better,
                                                model.uniform_density, v) -
                 hpo_detail::blended_logdensity(model.worse_num, model.has_worse ? model.n_worse : 0,
                                                model.uniform_density, v);
        if (std::holds_alternative<IntegerParam>(spec))
          candidate[name] = static_cast<std::int64_t>(std::llround(v));
        else
          candidate[name] = v;
      }
    }
    if (score > best_score) {
      best_score = score;
      best_config = std::move(candidate);
    }
  }
  return best_config;
}

struct OptimizeResult {
  Trial best;
  std::vector<Trial> history;
  std::vector<double> wall_seconds;  // per trial
};

// Sequential minimization: exactly max_evals objective calls; failures are
// recorded and excluded from the density models.
inline OptimizeResult optimize(const std::function<double(const ParamConfig&)>& objective,
                               const SearchSpace& space, int max_evals, const TpeConfig& cfg) {
  if (max_evals < 1) throw ConfigError("max_evals must be >= 1");
  OptimizeResult result;
  bool have_best = false;
  for (int i = 0; i < max_evals; ++i) {
    Trial trial;
    trial.config = suggest(space, result.history, cfg);
    const auto start = std::chrono::steady_clock::now();
    try {
      trial.value = objective(trial.config);
      trial.ok = std::isfinite(trial.value);
    } catch (const std::exception&) {
      trial.ok = false;
      trial.value = std::numeric_limits<double>::quiet_NaN();
    }
    result.wall_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    result.history.push_back(trial);
    if (trial.ok && (!have_best || trial.value < result.best.value)) {
      result.best = trial;
      have_best = true;
    }
  }
  if (!have_best)
    throw TrainError("optimization failed: all " + std::to_string(max_evals) + " trials failed");
  return result;
}

// ---------------------------------------------------------------------------
// published tuning spaces per family
// ---------------------------------------------------------------------------

// Open continuous bounds are realized with a 1e-3 inset since the exact
// endpoints are degenerate settings.
inline SearchSpace model_space(Family family) {
  constexpr double kInset = 1e-3;
  SearchSpace space;
  const ParamSpec depth_spec = IntegerParam{5, 50};
  const ParamSpec estimators = IntegerParam{50, 500};
  const ParamSpec lr = ContinuousParam{kInset, 1.0 - kInset};
  switch (family) {
    case Family::DT:
      space.params = {{"max_depth", depth_spec},
                      {"min_samples_split", IntegerParam{2, 11}},
                      {"min_samples_leaf", IntegerParam{1, 11}},
                      {"criterion", CategoricalParam{{"gini", "entropy"}}}};
      break;
    case Family::RF:
    case Family::ET:
      space.params = {{"n_estimators", estimators},
                      {"max_depth", depth_spec},
                      {"min_samples_split", IntegerParam{2, 11}},
                      {"min_samples_leaf", IntegerParam{1, 11}},
                      {"criterion", CategoricalParam{{"gini", "entropy"}}}};
      break;
    case Family::RGBT:
      space.params = {{"n_estimators", estimators},
                      {"max_depth", depth_spec},
                      {"learning_rate", lr},
                      {"gamma", ContinuousParam{kInset, 5.0 - kInset}},
                      {"subsample", ContinuousParam{0.5 + kInset, 1.0 - kInset}}};
      break;
    case Family::LGBT:
      space.params = {{"n_estimators", estimators},
                      {"max_depth", depth_spec},
                      {"learning_rate", lr},
                      {"num_leaves", IntegerParam{100, 2000}},
                      {"min_child_samples", IntegerParam{10, 50}}};
      break;
    case Family::OGBT:
      space.params = {{"n_estimators", estimators},
                      {"learning_rate", lr},
                      {"depth", IntegerParam{4, 10}}};
      break;
  }
  return space;
}

// trial config -> learner spec
inline LearnerSpec spec_from_config(Family family, const ParamConfig& config) {
  LearnerSpec spec;
  spec.family = family;
  for (const auto& [name, value] : config) {
    if (const auto* i = std::get_if<std::int64_t>(&value))
      spec.params[name] = *i;
    else if (const auto* d = std::get_if<double>(&value))
      spec.params[name] = *d;
    else
      spec.params[name] = std::get<std::string>(value);
  }
  validate_spec(spec);
  return spec;
}

}  // namespace autoids
