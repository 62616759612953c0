#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "autoids/autodp.hpp"
#include "autoids/autofe.hpp"
#include "autoids/dataset.hpp"
#include "autoids/ensemble.hpp"
#include "autoids/error.hpp"
#include "autoids/hpo.hpp"
#include "autoids/learner.hpp"
#include "autoids/metrics.hpp"
#include "autoids/model_io.hpp"
#include "autoids/report.hpp"

namespace autoids {

struct PipelineConfig {
  std::string data_path;
  std::string label_column = "Label";
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  int k_folds = 5;
  double alpha = 0.9;
  TvaeConfig tvae;
  int base_hpo_evals = 30;
  int meta_hpo_evals = 30;
  double tpe_gamma = 0.25;
  int tpe_startup = 10;
  int tpe_candidates = 24;
  MetaFeatureMode meta_mode = MetaFeatureMode::out_of_fold;
  BalanceTarget balance_target = BalanceTarget::half_average;
};

inline void validate_config(const PipelineConfig& cfg) {
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
    throw ConfigError("test_fraction must be in (0, 1)");
  if (cfg.k_folds < 2) throw ConfigError("k_folds must be >= 2");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
  if (cfg.base_hpo_evals < 1 || cfg.meta_hpo_evals < 1)
    throw ConfigError("hpo budgets must be >= 1");
  if (!(cfg.tpe_gamma > 0.0 && cfg.tpe_gamma < 1.0)) throw ConfigError("tpe gamma must be in (0, 1)");
  if (cfg.tpe_startup < 2) throw ConfigError("tpe n_startup must be >= 2");
  if (cfg.tpe_candidates < 1) throw ConfigError("tpe n_candidates must be >= 1");
  if (cfg.tvae.epochs < 1 || cfg.tvae.batch_size < 1 || cfg.tvae.latent_dim < 1 ||
      !(cfg.tvae.learning_rate > 0.0 && cfg.tvae.learning_rate < 1.0))
    throw ConfigError("invalid tvae settings");
}

inline PipelineConfig config_from_json(const Json& j) {
  PipelineConfig cfg;
  try {
    if (j.contains("data")) cfg.data_path = j["data"].get<std::string>();
    if (j.contains("label_column")) cfg.label_column = j["label_column"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("test_fraction")) cfg.test_fraction = j["test_fraction"].get<double>();
    if (j.contains("k_folds")) cfg.k_folds = j["k_folds"].get<int>();
    if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
    if (j.contains("tvae")) {
      const Json& t = j["tvae"];
      if (t.contains("latent_dim")) cfg.tvae.latent_dim = t["latent_dim"].get<int>();
      if (t.contains("hidden_sizes")) cfg.tvae.hidden_sizes = t["hidden_sizes"].get<std::vector<int>>();
      if (t.contains("epochs")) cfg.tvae.epochs = t["epochs"].get<int>();
      if (t.contains("batch_size")) cfg.tvae.batch_size = t["batch_size"].get<int>();
      if (t.contains("learning_rate")) cfg.tvae.learning_rate = t["learning_rate"].get<double>();
    }
    if (j.contains("hpo")) {
      const Json& h = j["hpo"];
      if (h.contains("base_evals")) cfg.base_hpo_evals = h["base_evals"].get<int>();
      if (h.contains("meta_evals")) cfg.meta_hpo_evals = h["meta_evals"].get<int>();
      if (h.contains("gamma")) cfg.tpe_gamma = h["gamma"].get<double>();
      if (h.contains("n_startup")) cfg.tpe_startup = h["n_startup"].get<int>();
      if (h.contains("n_candidates")) cfg.tpe_candidates = h["n_candidates"].get<int>();
    }
    if (j.contains("meta_feature_mode"))
      cfg.meta_mode = meta_feature_mode_from_name(j["meta_feature_mode"].get<std::string>());
    if (j.contains("balance_target")) {
      const std::string t = j["balance_target"].get<std::string>();
      if (t == "half_average")
        cfg.balance_target = BalanceTarget::half_average;
      else if (t == "average")
        cfg.balance_target = BalanceTarget::average;
      else
        throw ConfigError("balance_target must be 'half_average' or 'average'");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

inline Json config_to_json(const PipelineConfig& cfg) {
  Json j;
  j["data"] = cfg.data_path;
  j["label_column"] = cfg.label_column;
  j["seed"] = cfg.seed;
  j["test_fraction"] = cfg.test_fraction;
  j["k_folds"] = cfg.k_folds;
  j["alpha"] = cfg.alpha;
  j["tvae"] = {{"latent_dim", cfg.tvae.latent_dim},
               {"hidden_sizes", cfg.tvae.hidden_sizes},
               {"epochs", cfg.tvae.epochs},
               {"batch_size", cfg.tvae.batch_size},
               {"learning_rate", cfg.tvae.learning_rate}};
  j["hpo"] = {{"base_evals", cfg.base_hpo_evals},
              {"meta_evals", cfg.meta_hpo_evals},
              {"gamma", cfg.tpe_gamma},
              {"n_startup", cfg.tpe_startup},
              {"n_candidates", cfg.tpe_candidates}};
  j["meta_feature_mode"] = meta_feature_mode_name(cfg.meta_mode);
  j["balance_target"] =
      cfg.balance_target == BalanceTarget::half_average ? "half_average" : "average";
  return j;
}

namespace pipeline_detail {

template <typename Fn>
auto run_stage(const std::string& tag, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError("[" + tag + "] " + e.what());
  } catch (const DataError& e) {
    throw DataError("[" + tag + "] " + e.what());
  } catch (const TrainError& e) {
    throw TrainError("[" + tag + "] " + e.what());
  } catch (const PersistError& e) {
    throw PersistError("[" + tag + "] " + e.what());
  } catch (const std::exception& e) {
    throw TrainError("[" + tag + "] " + e.what());
  }
}

inline double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace pipeline_detail

// wall time of a full ensemble pass divided by the row count, in ms
inline double measure_inference(const StackedEnsemble& e, const Matrix& x) {
  if (x.rows() == 0) throw DataError("measure_inference needs at least one row");
  const auto start = std::chrono::steady_clock::now();
  (void)predict_ensemble(e, x);
  return pipeline_detail::seconds_since(start) * 1000.0 / static_cast<double>(x.rows());
}

struct RunResult {
  StackedEnsemble ensemble;
  Json report;
};

// The four training stages end to end: balance the training split, rank
// the six families and select features, tune the three best, stack them,
// then score the untouched holdout.
inline RunResult run_train(const PipelineConfig& cfg) {
  using pipeline_detail::run_stage;
  validate_config(cfg);
  const auto t_total = std::chrono::steady_clock::now();
  Json timings;

  // ingest + split
  auto t_stage = std::chrono::steady_clock::now();
  EncodedDataset ds;
  SplitIndices split;
  run_stage("stage 0: ingest", [&] {
    const RawTable table = load_csv(cfg.data_path, cfg.label_column);
    ds = sanitize_encode(table);
    split = stratified_split(ds, cfg.test_fraction, cfg.seed);
  });
  timings["ingest_seconds"] = pipeline_detail::seconds_since(t_stage);

  // stage 1: automated data balancing
  t_stage = std::chrono::steady_clock::now();
  BalancedView balanced;
  run_stage("stage 1: autodp", [&] {
    TvaeConfig tvae_cfg = cfg.tvae;
    tvae_cfg.seed = derive_seed(cfg.seed, 0xDA7A);
    balanced = balance(ds, split.train_idx, tvae_cfg, cfg.balance_target);
  });
  timings["balance_seconds"] = pipeline_detail::seconds_since(t_stage);

  // stage 2: family ranking, importance averaging, feature selection
  t_stage = std::chrono::steady_clock::now();
  std::vector<CvScore> cv_scores;
  std::vector<Family> top3;
  std::vector<double> avg_importance;
  FeatureSelection selection;
  Matrix x_sel;
  run_stage("stage 2: autofe", [&] {
    cv_scores = evaluate_families(balanced.features, balanced.labels, ds.n_classes, cfg.k_folds,
                                  derive_seed(cfg.seed, 0xCF0));
    top3 = rank_learners(cv_scores);

    std::vector<std::vector<double>> importances(3);
    parallel_for(3, [&](std::size_t i) {
      const TrainedModel model =
          fit_model(balanced.features, balanced.labels, ds.n_classes, default_spec(top3[i]),
                    derive_seed(cfg.seed, 0x1337 + i));
      importances[i] = model.feature_importances();
    });
    avg_importance = average_importances(importances[0], importances[1], importances[2]);
    selection = select_features(avg_importance, cfg.alpha);
    x_sel = project_columns(balanced.features, selection.selected);
  });
  timings["select_seconds"] = pipeline_detail::seconds_since(t_stage);

  // stage 3: per-base hyperparameter optimization
  t_stage = std::chrono::steady_clock::now();
  std::vector<LearnerSpec> tuned(3);
  std::vector<OptimizeResult> hpo_results(3);
  run_stage("stage 3: hpo", [&] {
    parallel_for(3, [&](std::size_t i) {
      const Family family = top3[i];
      TpeConfig tpe;
      tpe.gamma = cfg.tpe_gamma;
      tpe.n_startup = cfg.tpe_startup;
      tpe.n_candidates = cfg.tpe_candidates;
      tpe.seed = derive_seed(cfg.seed, 0x890 + static_cast<std::uint64_t>(family));
      const std::uint64_t cv_seed = derive_seed(cfg.seed, 0x891 + static_cast<std::uint64_t>(family));
      auto objective = [&](const ParamConfig& config) {
        const LearnerSpec spec = spec_from_config(family, config);
        return 1.0 -
               cross_validate(x_sel, balanced.labels, ds.n_classes, spec, cfg.k_folds, cv_seed)
                   .mean_f1;
      };
      hpo_results[i] = optimize(objective, model_space(family), cfg.base_hpo_evals, tpe);
      tuned[i] = spec_from_config(family, hpo_results[i].best.config);
    });
  });
  timings["hpo_seconds"] = pipeline_detail::seconds_since(t_stage);

  // stage 4: confidence-based stacking
  t_stage = std::chrono::steady_clock::now();
  OcseResult ocse;
  run_stage("stage 4: ensemble", [&] {
    TpeConfig tpe;
    tpe.gamma = cfg.tpe_gamma;
    tpe.n_startup = cfg.tpe_startup;
    tpe.n_candidates = cfg.tpe_candidates;
    ocse = train_ocse(x_sel, balanced.labels, ds.n_classes, tuned, top3[0], tpe,
                      cfg.meta_hpo_evals, cfg.k_folds, derive_seed(cfg.seed, 0x0C5E), cfg.meta_mode);
  });
  timings["ensemble_seconds"] = pipeline_detail::seconds_since(t_stage);

  RunResult result;
  StackedEnsemble& e = result.ensemble;
  e.base_families = top3;
  e.base_specs = tuned;
  e.base_models = std::move(ocse.base_models);
  e.meta_family = top3[0];
  e.meta_spec = ocse.meta_spec;
  e.meta_model = std::move(ocse.meta_model);
  e.selection = selection;
  e.original_feature_count = ds.features.cols();
  e.feature_names = ds.feature_names;
  e.class_names = ds.class_names;
  e.mode = cfg.meta_mode;

  // holdout evaluation
  t_stage = std::chrono::steady_clock::now();
  MetricBlock holdout_metrics;
  std::vector<double> base_holdout_f1(3, 0.0);
  double inference_ms = 0.0;
  std::size_t test_rows = 0;
  run_stage("stage 5: evaluate", [&] {
    const Matrix x_test = ds.features.take_rows(split.test_idx);
    std::vector<int> y_test;
    y_test.reserve(split.test_idx.size());
    for (const std::size_t i : split.test_idx) y_test.push_back(ds.labels[i]);
    test_rows = x_test.rows();

    const auto [labels, proba] = predict_ensemble(e, x_test);
    (void)proba;
    holdout_metrics = compute_metrics(y_test, labels, ds.n_classes);

    const Matrix x_test_sel = project_columns(x_test, selection.selected);
    for (std::size_t m = 0; m < 3; ++m) {
      const MetricBlock block =
          compute_metrics(y_test, e.base_models[m].predict(x_test_sel), ds.n_classes);
      base_holdout_f1[m] = block.weighted_f1;
    }
    inference_ms = measure_inference(e, x_test);
  });
  timings["evaluate_seconds"] = pipeline_detail::seconds_since(t_stage);
  timings["total_seconds"] = pipeline_detail::seconds_since(t_total);

  // split/bookkeeping audit: the holdout must be disjoint from training,
  // the union exhaustive, and the balanced view must carry the training
  // rows verbatim
  bool disjoint = true, exhaustive = true, verbatim = true;
  {
    std::vector<char> mark(ds.size(), 0);
    for (const std::size_t i : split.train_idx) mark[i] = 1;
    for (const std::size_t i : split.test_idx) {
      if (mark[i] == 1) disjoint = false;
      mark[i] = 2;
    }
    for (const char m : mark) exhaustive = exhaustive && m != 0;
    for (std::size_t r = 0; r < split.train_idx.size() && verbatim; ++r) {
      if (balanced.labels[r] != ds.labels[split.train_idx[r]]) verbatim = false;
      for (std::size_t j = 0; j < ds.features.cols(); ++j)
        if (balanced.features(r, j) != ds.features(split.train_idx[r], j)) verbatim = false;
    }
  }

  Json& report = result.report;
  report["schema_version"] = kReportSchemaVersion;
  report["config"] = config_to_json(cfg);
  report["dataset"] = {{"rows", ds.size()},
                       {"features", ds.dim()},
                       {"classes", ds.n_classes},
                       {"class_names", ds.class_names},
                       {"feature_names", ds.feature_names},
                       {"train_rows", split.train_idx.size()},
                       {"test_rows", test_rows}};

  Json balance_classes = Json::array();
  for (const ClassBalanceSummary& s : balanced.per_class)
    balance_classes.push_back({{"class", ds.class_names[static_cast<std::size_t>(s.class_id)]},
                               {"before", s.before},
                               {"after", s.after},
                               {"jitter_fallback", s.jitter_fallback}});
  report["balancing"] = {
      {"average", balanced.average},
      {"threshold", balanced.threshold},
      {"target", balanced.target == BalanceTarget::half_average ? "half_average" : "average"},
      {"synthetic_rows", balanced.labels.size() - balanced.original_count},
      {"per_class", balance_classes}};

  Json cv_table = Json::array();
  for (const CvScore& s : cv_scores)
    cv_table.push_back({{"family", family_name(s.family)},
                        {"mean_f1", s.mean_f1},
                        {"fold_f1", s.fold_f1},
                        {"mean_fit_seconds", s.mean_fit_seconds}});
  report["cv_table"] = cv_table;

  Json base_families = Json::array();
  for (const Family f : top3) base_families.push_back(family_name(f));
  report["base_families"] = base_families;

  Json selected_names = Json::array();
  Json cumulative_curve = Json::array();
  double running = 0.0;
  for (const std::size_t f : selection.selected) {
    selected_names.push_back(ds.feature_names[f]);
    running += avg_importance[f];
    cumulative_curve.push_back(running);
  }
  report["feature_selection"] = {{"alpha", selection.alpha},
                                 {"cumulative", selection.cumulative},
                                 {"fallback_all_features", selection.all_features_fallback},
                                 {"selected_indices", selection.selected},
                                 {"selected_names", selected_names},
                                 {"importances", avg_importance},
                                 {"cumulative_curve", cumulative_curve}};

  Json hpo = Json::object();
  for (std::size_t i = 0; i < 3; ++i) hpo[family_name(top3[i])] = hpo_history_to_json(hpo_results[i]);
  report["hpo"] = hpo;

  report["meta"] = {{"family", family_name(e.meta_family)},
                    {"mode", meta_feature_mode_name(e.mode)},
                    {"config", spec_params_to_json(e.meta_spec)},
                    {"hpo", hpo_history_to_json(ocse.meta_hpo)}};

  Json per_base_f1 = Json::object();
  double best_base_f1 = 0.0;
  for (std::size_t m = 0; m < 3; ++m) {
    per_base_f1[family_name(top3[m])] = base_holdout_f1[m];
    best_base_f1 = std::max(best_base_f1, base_holdout_f1[m]);
  }
  report["holdout"] = {{"metrics", metrics_to_json(holdout_metrics, ds.class_names)},
                       {"per_base_f1", per_base_f1},
                       {"best_base_f1", best_base_f1}};

  timings["inference"] = {{"per_sample_ms", inference_ms}, {"batch_rows", test_rows}};
  report["timings"] = timings;

  report["audit"] = {{"train_test_disjoint", disjoint},
                     {"split_exhaustive", exhaustive},
                     {"train_rows_verbatim", verbatim},
                     {"meta_feature_mode", meta_feature_mode_name(e.mode)}};
  return result;
}

// ---------------------------------------------------------------------------
// scoring new tables against a trained ensemble
// ---------------------------------------------------------------------------

struct AlignedData {
  Matrix features;  // model feature order, original width
  std::vector<int> labels;
  bool has_labels = false;
};

// Reorders the table's columns to the model's feature order (matching by
// trimmed name) and maps labels through the model's class table when a
// label column is present.
inline AlignedData align_for_model(const StackedEnsemble& e, const RawTable& table,
                                   const std::string& label_column) {
  AlignedData aligned;
  aligned.features = sanitize_features(table, e.feature_names);

  std::size_t label_idx = table.header.size();
  for (std::size_t j = 0; j < table.header.size(); ++j)
    if (table.header[j] == label_column) label_idx = j;
  if (label_idx != table.header.size()) {
    aligned.has_labels = true;
    aligned.labels.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const std::string name = detail::trim(table.rows[i][label_idx]);
      int id = -1;
      for (std::size_t c = 0; c < e.class_names.size(); ++c)
        if (e.class_names[c] == name) id = static_cast<int>(c);
      if (id < 0)
        throw DataError("label '" + name + "' at row " + std::to_string(i + 2) +
                        " is not among the model's classes");
      aligned.labels.push_back(id);
    }
  }
  return aligned;
}

// evaluation report for a labeled table against a loaded model
inline Json evaluate_model(const StackedEnsemble& e, const RawTable& table,
                           const std::string& label_column) {
  const AlignedData aligned = align_for_model(e, table, label_column);
  if (!aligned.has_labels)
    throw DataError("evaluate requires the label column '" + label_column + "'");
  const auto [labels, proba] = predict_ensemble(e, aligned.features);
  (void)proba;
  const MetricBlock metrics = compute_metrics(aligned.labels, labels, e.n_classes());
  const double inference_ms = measure_inference(e, aligned.features);

  Json report;
  report["schema_version"] = kReportSchemaVersion;
  report["rows"] = aligned.features.rows();
  report["metrics"] = metrics_to_json(metrics, e.class_names);
  report["inference"] = {{"per_sample_ms", inference_ms}, {"batch_rows", aligned.features.rows()}};
  return report;
}

}  // namespace autoids
