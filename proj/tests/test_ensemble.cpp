#include <doctest.h>

#include <vector>

#include "autoids/ensemble.hpp"
#include "support/fixtures.hpp"

using namespace autoids;

namespace {

// single-leaf model emitting a fixed confidence vector
TrainedModel constant_model(const std::vector<double>& dist, std::size_t feature_count) {
  TrainedModel model;
  model.family = Family::DT;
  model.feature_count = feature_count;
  model.n_classes = static_cast<int>(dist.size());
  Tree tree;
  TreeNode leaf;
  leaf.count = 1;
  leaf.dist = dist;
  tree.nodes.push_back(leaf);
  ClassForest forest;
  forest.trees.push_back(tree);
  model.impl = std::move(forest);
  return model;
}

LearnerSpec small_tree_spec() {
  LearnerSpec spec;
  spec.family = Family::DT;
  spec.params = {{"max_depth", std::int64_t{6}},
                 {"min_samples_split", std::int64_t{2}},
                 {"min_samples_leaf", std::int64_t{1}},
                 {"criterion", std::string("gini")}};
  return spec;
}

}  // namespace

TEST_CASE("meta features concatenate base confidences in rank order") {
  const std::vector<TrainedModel> models = {constant_model({0.6, 0.3, 0.1}, 4),
                                            constant_model({0.1, 0.8, 0.1}, 4),
                                            constant_model({0.2, 0.2, 0.6}, 4)};
  Matrix x(100, 4);
  const Matrix meta = build_meta_features(models, x);
  CHECK(meta.rows() == 100);
  CHECK(meta.cols() == 9);

  // exact block layout from the hand-built leaf distributions
  const std::vector<double> expected = {0.6, 0.3, 0.1, 0.1, 0.8, 0.1, 0.2, 0.2, 0.6};
  for (std::size_t j = 0; j < 9; ++j) CHECK(meta(0, j) == doctest::Approx(expected[j]));

  // every length-c block row-sums to one
  for (std::size_t m = 0; m < 3; ++m) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) sum += meta(42, m * 3 + c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("meta features reject mismatched feature width") {
  const std::vector<TrainedModel> models = {constant_model({0.5, 0.5}, 3)};
  Matrix x(5, 2);
  CHECK_THROWS_AS(build_meta_features(models, x), DataError);
}

TEST_CASE("out-of-fold meta features never come from a model that saw the row") {
  std::vector<int> labels;
  const Matrix x = testsupport::make_blobs({60, 60, 30}, {{0, 0}, {4, 0}, {0, 4}}, 0.8, 91, labels);
  const std::vector<LearnerSpec> specs(3, small_tree_spec());

  TpeConfig tpe;
  tpe.n_startup = 2;
  const std::uint64_t seed = 1234;
  const int k = 5;
  const OcseResult result = train_ocse(x, labels, 3, specs, Family::DT, tpe, 2, k, seed,
                                       MetaFeatureMode::out_of_fold);

  // reference reconstruction with the same derived streams
  const FoldAssignment folds = stratified_kfold(labels, 3, k, derive_seed(seed, 0x00F0));
  CHECK(result.meta_fold_of == folds.fold_of);

  Matrix reference(x.rows(), 9);
  for (int fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> fit_rows, held_rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      (folds.fold_of[i] == fold ? held_rows : fit_rows).push_back(i);
    const Matrix x_fit = x.take_rows(fit_rows);
    std::vector<int> y_fit;
    for (const std::size_t i : fit_rows) y_fit.push_back(labels[i]);
    for (std::size_t m = 0; m < 3; ++m) {
      const TrainedModel model =
          fit_model(x_fit, y_fit, 3, specs[m],
                    derive_seed(seed, 0x0F00 + static_cast<std::uint64_t>(fold) * 8 + m));
      const Matrix proba = model.predict_proba(x.take_rows(held_rows));
      for (std::size_t r = 0; r < held_rows.size(); ++r)
        for (std::size_t c = 0; c < 3; ++c) reference(held_rows[r], m * 3 + c) = proba(r, c);
    }
  }
  CHECK(result.train_meta == reference);
}

TEST_CASE("perfect base models make the meta problem separable") {
  std::vector<int> labels;
  const Matrix x = testsupport::make_blobs({50, 50}, {{0, 0}, {10, 10}}, 0.3, 92, labels);
  const std::vector<LearnerSpec> specs(3, small_tree_spec());
  TpeConfig tpe;
  tpe.n_startup = 2;
  const OcseResult result =
      train_ocse(x, labels, 2, specs, Family::DT, tpe, 3, 5, 7, MetaFeatureMode::out_of_fold);
  CHECK(result.meta_hpo.best.value == doctest::Approx(0.0).epsilon(1e-9));  // CV F1 = 1
}

TEST_CASE("paper-literal mode trains on own-view confidences") {
  std::vector<int> labels;
  const Matrix x = testsupport::make_blobs({40, 40}, {{0, 0}, {5, 5}}, 0.5, 93, labels);
  const std::vector<LearnerSpec> specs(3, small_tree_spec());  // identical bases tolerated
  TpeConfig tpe;
  tpe.n_startup = 2;
  const OcseResult result =
      train_ocse(x, labels, 2, specs, Family::DT, tpe, 2, 4, 8, MetaFeatureMode::paper_literal);
  CHECK(result.train_meta.rows() == 80);
  CHECK(result.train_meta.cols() == 6);
  CHECK(result.meta_fold_of.empty());
  const Matrix direct = build_meta_features(result.base_models, x);
  CHECK(result.train_meta == direct);
}

TEST_CASE("predict_ensemble routes through selection, bases and meta") {
  std::vector<int> labels;
  const Matrix x = testsupport::make_blobs({60, 60}, {{0, 0, 0}, {6, 6, 0}}, 0.4, 94, labels);
  const std::vector<LearnerSpec> specs(3, small_tree_spec());
  TpeConfig tpe;
  tpe.n_startup = 2;
  const OcseResult ocse =
      train_ocse(project_columns(x, {0, 1}), labels, 2, specs, Family::DT, tpe, 2, 4, 9,
                 MetaFeatureMode::out_of_fold);

  StackedEnsemble e;
  e.base_families = {Family::DT, Family::DT, Family::DT};
  e.base_specs = specs;
  e.base_models = ocse.base_models;
  e.meta_family = Family::DT;
  e.meta_spec = ocse.meta_spec;
  e.meta_model = ocse.meta_model;
  e.selection.selected = {0, 1};
  e.original_feature_count = 3;
  e.feature_names = {"a", "b", "c"};
  e.class_names = {"x", "y"};

  const auto [pred, proba] = predict_ensemble(e, x);
  CHECK(pred == labels);
  for (std::size_t i = 0; i < proba.rows(); ++i)
    CHECK(proba(i, 0) + proba(i, 1) == doctest::Approx(1.0).epsilon(1e-9));

  const auto [empty_pred, empty_proba] = predict_ensemble(e, Matrix(0, 3));
  CHECK(empty_pred.empty());
  CHECK(empty_proba.rows() == 0);
  CHECK(empty_proba.cols() == 2);

  CHECK_THROWS_AS(predict_ensemble(e, Matrix(5, 7)), DataError);
}
