#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "autoids/common.hpp"
#include "autoids/dataset.hpp"
#include "autoids/rng.hpp"

namespace testsupport {

// Gaussian clusters, one center per class
inline autoids::Matrix make_blobs(const std::vector<std::size_t>& counts,
                                  const std::vector<std::vector<double>>& centers, double spread,
                                  std::uint64_t seed, std::vector<int>& labels) {
  std::size_t n = 0;
  for (const std::size_t c : counts) n += c;
  const std::size_t d = centers[0].size();
  autoids::Matrix x(n, d);
  labels.clear();
  labels.reserve(n);
  autoids::Rng rng(seed);
  std::size_t row = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i, ++row) {
      for (std::size_t j = 0; j < d; ++j) x(row, j) = centers[c][j] + spread * rng.normal();
      labels.push_back(static_cast<int>(c));
    }
  }
  return x;
}

// dataset wrapper around a plain matrix
inline autoids::EncodedDataset make_dataset(const autoids::Matrix& x,
                                            const std::vector<int>& labels, int n_classes) {
  autoids::EncodedDataset ds;
  ds.features = x;
  ds.labels = labels;
  ds.n_classes = n_classes;
  for (int c = 0; c < n_classes; ++c) ds.class_names.push_back("class" + std::to_string(c));
  for (std::size_t j = 0; j < x.cols(); ++j) ds.feature_names.push_back("f" + std::to_string(j));
  return ds;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("autoids_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }

  void write(const std::string& contents) const {
    std::ofstream out(path, std::ios::trunc);
    out << contents;
  }
};

}  // namespace testsupport
