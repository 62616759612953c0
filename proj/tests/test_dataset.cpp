#include <doctest.h>

#include <algorithm>
#include <set>

#include "autoids/dataset.hpp"
#include "support/fixtures.hpp"

using namespace autoids;
using testsupport::TempFile;

TEST_CASE("load_csv parses a basic labeled table") {
  TempFile file("basic.csv");
  file.write("a,b,Label\n1,2,BENIGN\n3,4,DoS\n");
  const RawTable table = load_csv(file.path, "Label");
  CHECK(table.header == std::vector<std::string>{"a", "b", "Label"});
  CHECK(table.rows.size() == 2);
  CHECK(table.label_column == "Label");
}

TEST_CASE("load_csv trims padded header names") {
  TempFile file("padded.csv");
  file.write("a, b , Label\n1,2,x\n");
  const RawTable table = load_csv(file.path, "Label");
  CHECK(table.header[1] == "b");
  CHECK(table.header[2] == "Label");
}

TEST_CASE("load_csv reports ragged rows with the line number") {
  TempFile file("ragged.csv");
  file.write("a,b,Label\n1,2,x\n1,2\n");
  CHECK_THROWS_WITH_AS(load_csv(file.path, "Label"), doctest::Contains("line 3"), DataError);
}

TEST_CASE("load_csv error paths") {
  CHECK_THROWS_AS(load_csv("no_such_file.csv", "Label"), DataError);

  TempFile dup("dup.csv");
  dup.write("a,a,Label\n1,2,x\n");
  CHECK_THROWS_WITH_AS(load_csv(dup.path, "Label"), doctest::Contains("duplicate"), DataError);

  TempFile nolabel("nolabel.csv");
  nolabel.write("a,b,c\n1,2,3\n");
  CHECK_THROWS_WITH_AS(load_csv(nolabel.path, "Label"), doctest::Contains("Label"), DataError);
}

TEST_CASE("load_csv handles quoted cells") {
  TempFile file("quoted.csv");
  file.write("a,b,Label\n\"1,5\",2,\"WEB, Attack\"\n");
  const RawTable table = load_csv(file.path, "Label");
  CHECK(table.rows[0][0] == "1,5");
  CHECK(table.rows[0][2] == "WEB, Attack");
}

TEST_CASE("sanitize_encode imputes the median for missing cells") {
  RawTable table;
  table.header = {"x", "Label"};
  table.label_column = "Label";
  table.rows = {{"1.0", "a"}, {"NaN", "a"}, {"3.0", "b"}};
  const EncodedDataset ds = sanitize_encode(table);
  CHECK(ds.features(0, 0) == doctest::Approx(1.0));
  CHECK(ds.features(1, 0) == doctest::Approx(2.0));  // median of {1, 3}
  CHECK(ds.features(2, 0) == doctest::Approx(3.0));
}

TEST_CASE("sanitize_encode clamps infinities to finite extrema") {
  RawTable table;
  table.header = {"x", "Label"};
  table.label_column = "Label";
  table.rows = {{"1.0", "a"}, {"+Inf", "a"}, {"3.0", "b"}, {"-infinity", "b"}};
  const EncodedDataset ds = sanitize_encode(table);
  CHECK(ds.features(1, 0) == doctest::Approx(3.0));
  CHECK(ds.features(3, 0) == doctest::Approx(1.0));
}

TEST_CASE("sanitize_encode maps labels in first-appearance order") {
  RawTable table;
  table.header = {"x", "Label"};
  table.label_column = "Label";
  table.rows = {{"1", "BENIGN"}, {"2", "DoS"}, {"3", "BENIGN"}};
  const EncodedDataset ds = sanitize_encode(table);
  CHECK(ds.labels == std::vector<int>{0, 1, 0});
  CHECK(ds.class_names == std::vector<std::string>{"BENIGN", "DoS"});
  CHECK(ds.n_classes == 2);

  // round-trip: ids through class_names reproduce the original strings
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    CHECK(ds.class_names[static_cast<std::size_t>(ds.labels[i])] == table.rows[i][1]);
}

TEST_CASE("sanitize_encode rejects unusable columns and cells") {
  RawTable empty_col;
  empty_col.header = {"x", "Label"};
  empty_col.label_column = "Label";
  empty_col.rows = {{"nan", "a"}, {"", "b"}};
  CHECK_THROWS_AS(sanitize_encode(empty_col), DataError);

  RawTable bad_cell;
  bad_cell.header = {"x", "Label"};
  bad_cell.label_column = "Label";
  bad_cell.rows = {{"1.0", "a"}, {"oops", "b"}};
  CHECK_THROWS_WITH_AS(sanitize_encode(bad_cell), doctest::Contains("oops"), DataError);
}

TEST_CASE("sanitize_encode is idempotent") {
  RawTable table;
  table.header = {"x", "y", "Label"};
  table.label_column = "Label";
  table.rows = {{"1", "inf", "a"}, {"", "2", "a"}, {"5", "-inf", "b"}, {"nan", "0.5", "b"}};
  const EncodedDataset once = sanitize_encode(table);

  RawTable again;
  again.header = table.header;
  again.label_column = "Label";
  for (std::size_t i = 0; i < once.size(); ++i) {
    char a[32], b[32];
    std::snprintf(a, sizeof a, "%.17g", once.features(i, 0));
    std::snprintf(b, sizeof b, "%.17g", once.features(i, 1));
    again.rows.push_back({a, b, table.rows[i][2]});
  }
  const EncodedDataset twice = sanitize_encode(again);
  for (std::size_t i = 0; i < once.size(); ++i)
    for (std::size_t j = 0; j < once.dim(); ++j)
      CHECK(once.features(i, j) == doctest::Approx(twice.features(i, j)).epsilon(1e-15));
}

TEST_CASE("stratified_split honors per-class proportions") {
  std::vector<int> labels;
  auto x = testsupport::make_blobs({80, 20}, {{0.0}, {1.0}}, 0.1, 1, labels);
  const auto ds = testsupport::make_dataset(x, labels, 2);
  const SplitIndices split = stratified_split(ds, 0.2, 7);

  std::size_t test0 = 0, test1 = 0;
  for (const std::size_t i : split.test_idx) (ds.labels[i] == 0 ? test0 : test1)++;
  CHECK(test0 == 16);
  CHECK(test1 == 4);
  CHECK(split.train_idx.size() + split.test_idx.size() == 100);
}

TEST_CASE("stratified_split on a single class") {
  std::vector<int> labels(10, 0);
  Matrix x(10, 1);
  const auto ds = testsupport::make_dataset(x, labels, 1);
  const SplitIndices split = stratified_split(ds, 0.2, 3);
  CHECK(split.test_idx.size() == 2);
}

TEST_CASE("stratified_split is deterministic and exhaustive") {
  std::vector<int> labels;
  auto x = testsupport::make_blobs({37, 13, 5}, {{0.0}, {1.0}, {2.0}}, 0.1, 2, labels);
  const auto ds = testsupport::make_dataset(x, labels, 3);

  const SplitIndices a = stratified_split(ds, 0.3, 11);
  const SplitIndices b = stratified_split(ds, 0.3, 11);
  CHECK(a.train_idx == b.train_idx);
  CHECK(a.test_idx == b.test_idx);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SplitIndices s = stratified_split(ds, 0.3, seed);
    std::set<std::size_t> seen;
    for (const std::size_t i : s.train_idx) seen.insert(i);
    for (const std::size_t i : s.test_idx) CHECK(seen.insert(i).second);
    CHECK(seen.size() == ds.size());

    // per-class deviation from the target is at most one sample
    std::vector<double> test_count(3, 0.0), total(3, 0.0);
    for (const std::size_t i : s.test_idx) test_count[static_cast<std::size_t>(ds.labels[i])]++;
    for (const int y : ds.labels) total[static_cast<std::size_t>(y)]++;
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(std::abs(test_count[c] - 0.3 * total[c]) <= 1.0);
  }
}

TEST_CASE("stratified_split rejects singleton classes") {
  std::vector<int> labels = {0, 0, 1};
  Matrix x(3, 1);
  const auto ds = testsupport::make_dataset(x, labels, 2);
  CHECK_THROWS_AS(stratified_split(ds, 0.5, 1), DataError);
}

TEST_CASE("stratified_kfold balances folds within one sample per class") {
  std::vector<int> labels;
  auto x = testsupport::make_blobs({10, 5}, {{0.0}, {1.0}}, 0.1, 3, labels);
  const auto ds = testsupport::make_dataset(x, labels, 2);
  const FoldAssignment folds = stratified_kfold(ds, 5, 9);

  std::vector<std::vector<int>> count(5, std::vector<int>(2, 0));
  for (std::size_t i = 0; i < ds.size(); ++i)
    count[static_cast<std::size_t>(folds.fold_of[i])][static_cast<std::size_t>(ds.labels[i])]++;
  for (int f = 0; f < 5; ++f) {
    CHECK(count[static_cast<std::size_t>(f)][0] == 2);
    CHECK(count[static_cast<std::size_t>(f)][1] == 1);
  }

  const FoldAssignment again = stratified_kfold(ds, 5, 9);
  CHECK(folds.fold_of == again.fold_of);
}

TEST_CASE("stratified_kfold rejects classes smaller than k") {
  std::vector<int> labels;
  auto x = testsupport::make_blobs({10, 5}, {{0.0}, {1.0}}, 0.1, 3, labels);
  const auto ds = testsupport::make_dataset(x, labels, 2);
  CHECK_THROWS_AS(stratified_kfold(ds, 6, 1), DataError);
}

TEST_CASE("class_distribution computes the half-average threshold") {
  std::vector<int> labels;
  auto x = testsupport::make_blobs({1000, 100, 10}, {{0.0}, {1.0}, {2.0}}, 0.1, 4, labels);
  const auto ds = testsupport::make_dataset(x, labels, 3);
  const ClassDistribution dist = class_distribution(ds, iota_index(ds.size()));
  CHECK(dist.counts == std::vector<std::size_t>{1000, 100, 10});
  CHECK(dist.average == doctest::Approx(370.0));
  CHECK(dist.threshold == doctest::Approx(185.0));

  std::vector<int> even = {0, 0, 1, 1};
  Matrix x2(4, 1);
  const auto ds2 = testsupport::make_dataset(x2, even, 2);
  const ClassDistribution d2 = class_distribution(ds2, iota_index(4));
  CHECK(d2.average == doctest::Approx(2.0));
  CHECK(d2.threshold == doctest::Approx(1.0));

  std::vector<int> single(42, 0);
  Matrix x3(42, 1);
  const auto ds3 = testsupport::make_dataset(x3, single, 1);
  const ClassDistribution d3 = class_distribution(ds3, iota_index(42));
  CHECK(d3.average == doctest::Approx(42.0));
  CHECK(d3.threshold == doctest::Approx(21.0));
}
