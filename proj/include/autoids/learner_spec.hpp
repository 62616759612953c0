#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "autoids/error.hpp"

namespace autoids {

// the six tree-based learner families
enum class Family { DT, RF, ET, RGBT, LGBT, OGBT };

inline const std::vector<Family>& all_families() {
  static const std::vector<Family> families = {Family::DT,   Family::RF,   Family::ET,
                                               Family::RGBT, Family::LGBT, Family::OGBT};
  return families;
}

inline std::string family_name(Family f) {
  switch (f) {
    case Family::DT: return "DT";
    case Family::RF: return "RF";
    case Family::ET: return "ET";
    case Family::RGBT: return "RGBT";
    case Family::LGBT: return "LGBT";
    case Family::OGBT: return "OGBT";
  }
  return "?";
}

inline Family family_from_name(const std::string& name) {
  for (Family f : all_families())
    if (family_name(f) == name) return f;
  throw ConfigError("unknown learner family '" + name + "'");
}

enum class SplitCriterion { gini, entropy };

using HyperValue = std::variant<std::int64_t, double, std::string>;

// One learner family plus its hyperparameters. Only names valid for the
// family may be present; values must sit inside the declared bounds.
struct LearnerSpec {
  Family family = Family::DT;
  std::map<std::string, HyperValue> params;

  std::int64_t get_int(const std::string& name, std::int64_t fallback) const {
    const auto it = params.find(name);
    if (it == params.end()) return fallback;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
    if (const auto* d = std::get_if<double>(&it->second)) return static_cast<std::int64_t>(*d);
    throw ConfigError("hyperparameter '" + name + "' is not numeric");
  }

  double get_real(const std::string& name, double fallback) const {
    const auto it = params.find(name);
    if (it == params.end()) return fallback;
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
    throw ConfigError("hyperparameter '" + name + "' is not numeric");
  }

  std::string get_text(const std::string& name, const std::string& fallback) const {
    const auto it = params.find(name);
    if (it == params.end()) return fallback;
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    throw ConfigError("hyperparameter '" + name + "' is not text");
  }

  SplitCriterion criterion() const {
    const std::string c = get_text("criterion", "gini");
    if (c == "gini") return SplitCriterion::gini;
    if (c == "entropy") return SplitCriterion::entropy;
    throw ConfigError("criterion must be 'gini' or 'entropy', got '" + c + "'");
  }
};

namespace detail {

inline const std::vector<std::string>& valid_param_names(Family f) {
  static const std::vector<std::string> dt = {"max_depth", "min_samples_split",
                                              "min_samples_leaf", "criterion"};
  static const std::vector<std::string> forest = {"n_estimators", "max_depth", "min_samples_split",
                                                  "min_samples_leaf", "criterion"};
  static const std::vector<std::string> rgbt = {"n_estimators", "max_depth", "learning_rate",
                                                "gamma", "subsample"};
  static const std::vector<std::string> lgbt = {"n_estimators", "max_depth", "learning_rate",
                                                "num_leaves", "min_child_samples"};
  static const std::vector<std::string> ogbt = {"n_estimators", "learning_rate", "depth"};
  switch (f) {
    case Family::DT: return dt;
    case Family::RF:
    case Family::ET: return forest;
    case Family::RGBT: return rgbt;
    case Family::LGBT: return lgbt;
    case Family::OGBT: return ogbt;
  }
  return dt;
}

}  // namespace detail

inline void validate_spec(const LearnerSpec& spec) {
  const auto& names = detail::valid_param_names(spec.family);
  for (const auto& [name, value] : spec.params) {
    bool known = false;
    for (const auto& n : names) known = known || n == name;
    if (!known)
      throw ConfigError("hyperparameter '" + name + "' is not valid for family " +
                        family_name(spec.family));
    (void)value;
  }
  auto check_int = [&](const std::string& name, std::int64_t lo, std::int64_t hi,
                       std::int64_t fallback) {
    const std::int64_t v = spec.get_int(name, fallback);
    if (v < lo || v > hi)
      throw ConfigError("hyperparameter '" + name + "' = " + std::to_string(v) +
                        " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  };
  auto check_real = [&](const std::string& name, double lo, double hi, double fallback) {
    const double v = spec.get_real(name, fallback);
    if (!(v >= lo && v <= hi))
      throw ConfigError("hyperparameter '" + name + "' = " + std::to_string(v) + " outside [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
  };
  check_int("max_depth", 1, 1000, 20);
  check_int("min_samples_split", 2, 1000000, 2);
  check_int("min_samples_leaf", 1, 1000000, 1);
  check_int("n_estimators", 1, 5000, 100);
  check_int("num_leaves", 2, 1000000, 31);
  check_int("min_child_samples", 1, 1000000, 20);
  check_int("depth", 1, 30, 6);
  check_real("learning_rate", 1e-9, 1.0, 0.1);
  check_real("gamma", 0.0, 1e6, 0.0);
  check_real("subsample", 1e-9, 1.0, 1.0);
  spec.criterion();  // validates the text value
}

// Mid-range defaults: midpoints of the published tuning ranges where a
// parameter is listed there, module defaults otherwise. Used by the
// pre-tuning candidate ranking.
inline LearnerSpec default_spec(Family family) {
  LearnerSpec spec;
  spec.family = family;
  switch (family) {
    case Family::DT:
      spec.params = {{"max_depth", std::int64_t{27}},
                     {"min_samples_split", std::int64_t{6}},
                     {"min_samples_leaf", std::int64_t{6}},
                     {"criterion", std::string("gini")}};
      break;
    case Family::RF:
    case Family::ET:
      spec.params = {{"n_estimators", std::int64_t{275}},
                     {"max_depth", std::int64_t{27}},
                     {"min_samples_split", std::int64_t{6}},
                     {"min_samples_leaf", std::int64_t{6}},
                     {"criterion", std::string("gini")}};
      break;
    case Family::RGBT:
      spec.params = {{"n_estimators", std::int64_t{275}},
                     {"max_depth", std::int64_t{27}},
                     {"learning_rate", 0.5},
                     {"gamma", 2.5},
                     {"subsample", 0.75}};
      break;
    case Family::LGBT:
      spec.params = {{"n_estimators", std::int64_t{275}},
                     {"max_depth", std::int64_t{27}},
                     {"learning_rate", 0.5},
                     {"num_leaves", std::int64_t{1050}},
                     {"min_child_samples", std::int64_t{30}}};
      break;
    case Family::OGBT:
      spec.params = {{"n_estimators", std::int64_t{275}},
                     {"learning_rate", 0.5},
                     {"depth", std::int64_t{7}}};
      break;
  }
  return spec;
}

}  // namespace autoids
