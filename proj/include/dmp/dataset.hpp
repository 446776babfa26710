#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dmp/numerics.hpp"

namespace dmp {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Irregularly sampled multivariate series.
///
/// `values` is N x p; `observed(k, j)` marks entries that are visible to
/// inference. Entries that are not observed may still hold a ground-truth value
/// (NaN when unknown), so masking never destroys data.
struct MultiSeriesDataset {
  std::vector<double> times;
  Matrix values;
  Mask observed;
  std::vector<std::string> names;

  MultiSeriesDataset() = default;
  MultiSeriesDataset(std::vector<double> times, Matrix values, Mask observed,
                     std::vector<std::string> names = {});

  std::size_t size() const noexcept { return times.size(); }
  std::size_t series_count() const noexcept { return static_cast<std::size_t>(values.cols()); }
  bool is_observed(std::size_t k, std::size_t j) const {
    return observed(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
  }
  double value(std::size_t k, std::size_t j) const {
    return values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
  }

  std::size_t observed_count() const;
  std::size_t observed_count(std::size_t series) const;

  /// Checks shape agreement, strictly increasing finite times and finite
  /// observed values. Throws NonMonotoneTime, DuplicateTimestamp or
  /// InvalidArgument.
  void validate() const;

  /// Sub-dataset of the given series; timestamps where none of them is
  /// observed are dropped.
  MultiSeriesDataset select_series(const std::vector<std::size_t>& series) const;

  /// Mean and sample variance of the observed entries of one series.
  double observed_mean(std::size_t series) const;
  double observed_variance(std::size_t series) const;
};

/// Default names s1, s2, ...
std::vector<std::string> default_series_names(std::size_t p);

/// Per-series affine map y -> (y - offset) / scale fitted on observed entries.
struct Standardization {
  Vector offset;
  Vector scale;

  static Standardization fit(const MultiSeriesDataset& data);
  static Standardization identity(std::size_t p);
  MultiSeriesDataset apply(const MultiSeriesDataset& data) const;
};

}  // namespace dmp
