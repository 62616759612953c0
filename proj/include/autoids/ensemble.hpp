#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoids/autofe.hpp"
#include "autoids/common.hpp"
#include "autoids/dataset.hpp"
#include "autoids/error.hpp"
#include "autoids/hpo.hpp"
#include "autoids/learner.hpp"
#include "autoids/metrics.hpp"
#include "autoids/parallel.hpp"

namespace autoids {

// Where the meta-learner's training confidences come from: out-of-fold
// predictions (default, leakage-free) or the final base models scoring
// their own training set.
enum class MetaFeatureMode { out_of_fold, paper_literal };

inline std::string meta_feature_mode_name(MetaFeatureMode mode) {
  return mode == MetaFeatureMode::out_of_fold ? "out_of_fold" : "paper_literal";
}

inline MetaFeatureMode meta_feature_mode_from_name(const std::string& name) {
  if (name == "out_of_fold") return MetaFeatureMode::out_of_fold;
  if (name == "paper_literal") return MetaFeatureMode::paper_literal;
  throw ConfigError("unknown meta_feature_mode '" + name + "'");
}

// Confidence-based stacking ensemble: three tuned base models feeding a
// tuned meta-learner that reads their concatenated class confidences.
struct StackedEnsemble {
  std::vector<Family> base_families;      // rank order, best first
  std::vector<LearnerSpec> base_specs;    // tuned hyperparameters
  std::vector<TrainedModel> base_models;  // refit on the full training view
  Family meta_family = Family::DT;
  LearnerSpec meta_spec;
  TrainedModel meta_model;
  FeatureSelection selection;                // indices into the original feature order
  std::size_t original_feature_count = 0;
  std::vector<std::string> feature_names;  // original order
  std::vector<std::string> class_names;
  MetaFeatureMode mode = MetaFeatureMode::out_of_fold;

  int n_classes() const { return static_cast<int>(class_names.size()); }
};

// column blocks ordered by base-model rank; block j holds model j's
// per-class confidences
inline Matrix build_meta_features(const std::vector<TrainedModel>& models, const Matrix& x) {
  if (models.empty()) throw TrainError("no base models");
  const std::size_t c = static_cast<std::size_t>(models[0].n_classes);
  Matrix meta(x.rows(), models.size() * c);
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (models[m].feature_count != x.cols())
      throw DataError("base model " + std::to_string(m) + " expects " +
                      std::to_string(models[m].feature_count) + " features, got " +
                      std::to_string(x.cols()));
    const Matrix proba = models[m].predict_proba(x);
    for (std::size_t i = 0; i < x.rows(); ++i)
      std::copy(proba.row(i), proba.row(i) + c, meta.row(i) + m * c);
  }
  return meta;
}

struct OcseResult {
  std::vector<TrainedModel> base_models;  // refit on the full view
  TrainedModel meta_model;
  LearnerSpec meta_spec;
  Matrix train_meta;               // meta-features used to train the meta-learner
  std::vector<int> meta_fold_of;   // fold bookkeeping (out_of_fold mode)
  OptimizeResult meta_hpo;
};

// Trains the stacking layer. Out-of-fold mode: every row's meta-features
// come from base models trained on the other folds; the final base models
// are then refit on the full view. Literal mode trains once and scores
// the same view.
inline OcseResult train_ocse(const Matrix& x, const std::vector<int>& y, int n_classes,
                             const std::vector<LearnerSpec>& base_specs, Family meta_family,
                             const TpeConfig& hpo_cfg, int meta_evals, int k, std::uint64_t seed,
                             MetaFeatureMode mode) {
  if (base_specs.size() != 3) throw ConfigError("the stacking layer expects 3 base specs");
  const std::size_t c = static_cast<std::size_t>(n_classes);

  OcseResult result;
  result.base_models.resize(base_specs.size());

  if (mode == MetaFeatureMode::out_of_fold) {
    const FoldAssignment folds = stratified_kfold(y, n_classes, k, derive_seed(seed, 0x00F0));
    result.meta_fold_of = folds.fold_of;
    result.train_meta = Matrix(x.rows(), base_specs.size() * c);

    parallel_for(static_cast<std::size_t>(k), [&](std::size_t fold) {
      std::vector<std::size_t> fit_rows, held_rows;
      for (std::size_t i = 0; i < y.size(); ++i)
        (folds.fold_of[i] == static_cast<int>(fold) ? held_rows : fit_rows).push_back(i);
      const Matrix x_fit = x.take_rows(fit_rows);
      const Matrix x_held = x.take_rows(held_rows);
      std::vector<int> y_fit;
      y_fit.reserve(fit_rows.size());
      for (const std::size_t i : fit_rows) y_fit.push_back(y[i]);

      for (std::size_t m = 0; m < base_specs.size(); ++m) {
        const TrainedModel model = fit_model(x_fit, y_fit, n_classes, base_specs[m],
                                             derive_seed(seed, 0x0F00 + fold * 8 + m));
        const Matrix proba = model.predict_proba(x_held);
        for (std::size_t r = 0; r < held_rows.size(); ++r)
          std::copy(proba.row(r), proba.row(r) + c, result.train_meta.row(held_rows[r]) + m * c);
      }
    });

    parallel_for(base_specs.size(), [&](std::size_t m) {
      result.base_models[m] =
          fit_model(x, y, n_classes, base_specs[m], derive_seed(seed, 0xBA5E + m));
    });
  } else {
    parallel_for(base_specs.size(), [&](std::size_t m) {
      result.base_models[m] =
          fit_model(x, y, n_classes, base_specs[m], derive_seed(seed, 0xBA5E + m));
    });
    result.train_meta = build_meta_features(result.base_models, x);
  }

  // Tune the meta-learner on the meta-features, minimizing 1 - CV F1.
  // In out-of-fold mode the CV reuses the base-model folds: each held-out
  // fold's confidences come from base models the training folds never
  // used, so the estimate punishes configs that memorize per-fold quirks.
  const SearchSpace space = model_space(meta_family);
  TpeConfig meta_cfg = hpo_cfg;
  meta_cfg.seed = derive_seed(seed, 0x4E7A);
  const std::uint64_t cv_seed = derive_seed(seed, 0x4E7B);
  FoldAssignment meta_folds;
  if (mode == MetaFeatureMode::out_of_fold) {
    meta_folds.k = k;
    meta_folds.fold_of = result.meta_fold_of;
  } else {
    meta_folds = stratified_kfold(y, n_classes, k, cv_seed);
  }
  auto objective = [&](const ParamConfig& config) {
    const LearnerSpec spec = spec_from_config(meta_family, config);
    const CvScore score =
        cross_validate_folds(result.train_meta, y, n_classes, spec, meta_folds, cv_seed);
    return 1.0 - score.mean_f1;
  };
  result.meta_hpo = optimize(objective, space, meta_evals, meta_cfg);

  result.meta_spec = spec_from_config(meta_family, result.meta_hpo.best.config);
  result.meta_model = fit_model(result.train_meta, y, n_classes, result.meta_spec,
                                derive_seed(seed, 0x4E7C));
  return result;
}

// raw-width input -> selected columns -> base confidences -> meta verdict
inline std::pair<std::vector<int>, Matrix> predict_ensemble(const StackedEnsemble& e,
                                                            const Matrix& x) {
  if (x.cols() != e.original_feature_count)
    throw DataError("expected " + std::to_string(e.original_feature_count) + " features, got " +
                    std::to_string(x.cols()));
  if (x.rows() == 0)
    return {std::vector<int>{}, Matrix(0, static_cast<std::size_t>(e.n_classes()))};
  const Matrix x_sel = project_columns(x, e.selection.selected);
  const Matrix meta = build_meta_features(e.base_models, x_sel);
  Matrix proba = e.meta_model.predict_proba(meta);
  std::vector<int> labels(proba.rows());
  for (std::size_t i = 0; i < proba.rows(); ++i)
    labels[i] = static_cast<int>(argmax_tie_low(proba.row(i), proba.cols()));
  return {std::move(labels), std::move(proba)};
}

}  // namespace autoids
