#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "autoids/error.hpp"
#include "autoids/hpo.hpp"
#include "autoids/metrics.hpp"

namespace autoids {

using Json = nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

inline Json param_config_to_json(const ParamConfig& config) {
  Json out = Json::object();
  for (const auto& [name, value] : config) {
    if (const auto* i = std::get_if<std::int64_t>(&value))
      out[name] = *i;
    else if (const auto* d = std::get_if<double>(&value))
      out[name] = *d;
    else
      out[name] = std::get<std::string>(value);
  }
  return out;
}

inline Json spec_params_to_json(const LearnerSpec& spec) {
  Json out = Json::object();
  for (const auto& [name, value] : spec.params) {
    if (const auto* i = std::get_if<std::int64_t>(&value))
      out[name] = *i;
    else if (const auto* d = std::get_if<double>(&value))
      out[name] = *d;
    else
      out[name] = std::get<std::string>(value);
  }
  return out;
}

inline Json metrics_to_json(const MetricBlock& block, const std::vector<std::string>& class_names) {
  Json out;
  out["accuracy"] = block.accuracy;
  out["weighted_precision"] = block.weighted_precision;
  out["weighted_recall"] = block.weighted_recall;
  out["weighted_f1"] = block.weighted_f1;
  out["macro_precision"] = block.macro_precision;
  out["macro_recall"] = block.macro_recall;
  out["macro_f1"] = block.macro_f1;
  Json per_class = Json::array();
  for (std::size_t c = 0; c < block.per_class.size(); ++c) {
    const ClassMetrics& m = block.per_class[c];
    per_class.push_back({{"class", class_names[c]},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  }
  out["per_class"] = per_class;
  out["confusion"] = block.confusion;
  return out;
}

inline Json hpo_history_to_json(const OptimizeResult& result) {
  Json trials = Json::array();
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const Trial& t = result.history[i];
    Json entry;
    entry["config"] = param_config_to_json(t.config);
    entry["ok"] = t.ok;
    if (t.ok) entry["value"] = t.value;
    entry["wall_seconds"] = result.wall_seconds[i];
    trials.push_back(entry);
  }
  Json out;
  out["trials"] = trials;
  out["best_value"] = result.best.value;
  out["best_config"] = param_config_to_json(result.best.config);
  return out;
}

// Removes wall-clock content (keys ending in "_seconds" or "_ms") so two
// runs of the same seed can be compared byte for byte.
inline void strip_volatile_fields(Json& node) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end();) {
      const std::string& key = it.key();
      const bool volatile_key =
          (key.size() >= 8 && key.compare(key.size() - 8, 8, "_seconds") == 0) ||
          (key.size() >= 3 && key.compare(key.size() - 3, 3, "_ms") == 0);
      if (volatile_key) {
        it = node.erase(it);
      } else {
        strip_volatile_fields(it.value());
        ++it;
      }
    }
  } else if (node.is_array()) {
    for (auto& item : node) strip_volatile_fields(item);
  }
}

// structural check of a training report
inline void validate_report(const Json& report) {
  auto require = [&](const Json& node, const std::string& key, const char* context) {
    if (!node.contains(key))
      throw DataError(std::string("report missing '") + key + "' in " + context);
  };
  require(report, "schema_version", "root");
  if (report["schema_version"].get<int>() != kReportSchemaVersion)
    throw DataError("unexpected report schema version");
  for (const char* key : {"config", "dataset", "balancing", "cv_table", "base_families",
                          "feature_selection", "hpo", "meta", "holdout", "timings", "audit"})
    require(report, key, "root");
  require(report["dataset"], "rows", "dataset");
  require(report["dataset"], "classes", "dataset");
  require(report["balancing"], "per_class", "balancing");
  require(report["feature_selection"], "selected_indices", "feature_selection");
  require(report["feature_selection"], "importances", "feature_selection");
  require(report["holdout"], "metrics", "holdout");
  require(report["holdout"], "per_base_f1", "holdout");
  require(report["holdout"]["metrics"], "accuracy", "holdout.metrics");
  require(report["holdout"]["metrics"], "weighted_f1", "holdout.metrics");
  require(report["holdout"]["metrics"], "confusion", "holdout.metrics");
  require(report["timings"], "inference", "timings");
  require(report["timings"]["inference"], "per_sample_ms", "inference");
  require(report["audit"], "train_test_disjoint", "audit");
  if (!report["cv_table"].is_array() || report["cv_table"].size() != 6)
    throw DataError("cv_table must list the six families");
  if (!report["base_families"].is_array() || report["base_families"].size() != 3)
    throw DataError("base_families must list three families");
}

}  // namespace autoids
