#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "autoids/boosting.hpp"
#include "autoids/common.hpp"
#include "autoids/error.hpp"
#include "autoids/learner_spec.hpp"
#include "autoids/trees.hpp"

namespace autoids {

// A fitted learner of any of the six families, exposing class-confidence
// prediction and impurity-based feature importances.
struct TrainedModel {
  Family family = Family::DT;
  std::size_t feature_count = 0;
  int n_classes = 0;
  std::variant<ClassForest, BoostModel> impl;

  Matrix predict_proba(const Matrix& x) const {
    if (x.cols() != feature_count)
      throw DataError("expected " + std::to_string(feature_count) + " features, got " +
                      std::to_string(x.cols()));
    if (x.rows() == 0) return Matrix(0, static_cast<std::size_t>(n_classes));
    if (const auto* forest = std::get_if<ClassForest>(&impl))
      return forest_predict_proba(*forest, x, n_classes);
    return boost_predict_proba(std::get<BoostModel>(impl), x);
  }

  // argmax per row; ties resolve to the lowest class id
  std::vector<int> predict(const Matrix& x) const {
    const Matrix proba = predict_proba(x);
    std::vector<int> labels(proba.rows());
    for (std::size_t i = 0; i < proba.rows(); ++i)
      labels[i] = static_cast<int>(argmax_tie_low(proba.row(i), proba.cols()));
    return labels;
  }

  std::vector<double> feature_importances() const {
    if (const auto* forest = std::get_if<ClassForest>(&impl))
      return forest_importances(*forest, feature_count);
    return boost_importances(std::get<BoostModel>(impl), feature_count);
  }
};

inline TrainedModel fit_model(const Matrix& x, const std::vector<int>& y, int n_classes,
                              const LearnerSpec& spec, std::uint64_t seed) {
  TrainedModel model;
  model.family = spec.family;
  model.feature_count = x.cols();
  model.n_classes = n_classes;
  switch (spec.family) {
    case Family::DT:
    case Family::RF:
    case Family::ET: model.impl = fit_class_forest(x, y, n_classes, spec, seed); break;
    case Family::RGBT:
    case Family::LGBT:
    case Family::OGBT: model.impl = fit_gbt(x, y, n_classes, spec, seed); break;
  }
  return model;
}

}  // namespace autoids
