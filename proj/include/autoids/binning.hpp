#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "autoids/common.hpp"

namespace autoids {
namespace detail {

// Per-feature value discretization for split finding. Codes are ranks into
// the sorted distinct values when few enough, otherwise quantile bins.
// bin_max/bin_min hold the extreme observed values per code so candidate
// thresholds fall midway between adjacent occupied codes.
struct FeatureBins {
  std::vector<double> bin_max;  // per code: largest value in the bin
  std::vector<double> bin_min;  // per code: smallest value in the bin
  int n_codes = 0;

  double threshold_between(int left_code, int right_code) const {
    return 0.5 * (bin_max[left_code] + bin_min[right_code]);
  }
};

struct BinnedColumns {
  std::vector<FeatureBins> feature;        // d entries
  std::vector<std::uint16_t> codes;        // column-major: codes[f * n + i]
  std::size_t n_rows = 0;

  const std::uint16_t* column(std::size_t f) const { return codes.data() + f * n_rows; }
  int n_codes(std::size_t f) const { return feature[f].n_codes; }
};

// max_exact: discretize exactly while the distinct count stays at or below
// this; above it, fall back to `fallback_bins` quantile bins over the
// distinct values.
inline BinnedColumns bin_columns(const Matrix& x, std::size_t max_exact, std::size_t fallback_bins) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  BinnedColumns out;
  out.n_rows = n;
  out.feature.resize(d);
  out.codes.resize(n * d);

  std::vector<double> distinct;
  distinct.reserve(n);
  for (std::size_t f = 0; f < d; ++f) {
    distinct.clear();
    for (std::size_t i = 0; i < n; ++i) distinct.push_back(x(i, f));
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const std::size_t m = distinct.size();

    FeatureBins& bins = out.feature[f];
    if (m <= max_exact) {
      bins.n_codes = static_cast<int>(m);
      bins.bin_min = distinct;
      bins.bin_max = distinct;
      for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(distinct.begin(), distinct.end(), x(i, f));
        out.codes[f * n + i] = static_cast<std::uint16_t>(it - distinct.begin());
      }
    } else {
      // quantile bins over the distinct values
      std::vector<std::size_t> starts;  // first distinct index of each bin
      starts.push_back(0);
      for (std::size_t b = 1; b < fallback_bins; ++b) {
        const std::size_t pos = b * m / fallback_bins;
        if (pos > starts.back()) starts.push_back(pos);
      }
      const std::size_t n_bins = starts.size();
      bins.n_codes = static_cast<int>(n_bins);
      bins.bin_min.resize(n_bins);
      bins.bin_max.resize(n_bins);
      std::vector<double> upper(n_bins);  // last distinct value of each bin
      for (std::size_t b = 0; b < n_bins; ++b) {
        const std::size_t last = (b + 1 < n_bins ? starts[b + 1] : m) - 1;
        bins.bin_min[b] = distinct[starts[b]];
        bins.bin_max[b] = distinct[last];
        upper[b] = distinct[last];
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(upper.begin(), upper.end(), x(i, f));
        out.codes[f * n + i] = static_cast<std::uint16_t>(it - upper.begin());
      }
    }
  }
  return out;
}

}  // namespace detail
}  // namespace autoids
