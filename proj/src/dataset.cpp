#include "dmp/dataset.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dmp/error.hpp"

namespace dmp {

MultiSeriesDataset::MultiSeriesDataset(std::vector<double> times_, Matrix values_,
                                       Mask observed_, std::vector<std::string> names_)
    : times(std::move(times_)),
      values(std::move(values_)),
      observed(std::move(observed_)),
      names(std::move(names_)) {
  if (names.empty()) names = default_series_names(series_count());
  validate();
}

std::size_t MultiSeriesDataset::observed_count() const {
  return static_cast<std::size_t>(observed.count());
}

std::size_t MultiSeriesDataset::observed_count(std::size_t series) const {
  return static_cast<std::size_t>(observed.col(static_cast<Eigen::Index>(series)).count());
}

void MultiSeriesDataset::validate() const {
  const auto n = static_cast<Eigen::Index>(times.size());
  if (values.rows() != n || observed.rows() != n || observed.cols() != values.cols()) {
    throw Error(ErrorKind::InvalidArgument, "dataset: inconsistent shapes");
  }
  if (values.cols() == 0) {
    throw Error(ErrorKind::InvalidArgument, "dataset: no series");
  }
  if (names.size() != series_count()) {
    throw Error(ErrorKind::InvalidArgument, "dataset: series name count mismatch");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k])) {
      throw Error(ErrorKind::InvalidArgument,
                  "dataset: non-finite timestamp at row " + std::to_string(k));
    }
    if (k > 0 && times[k] == times[k - 1]) {
      throw Error(ErrorKind::DuplicateTimestamp,
                  "dataset: duplicate timestamp at row " + std::to_string(k));
    }
    if (k > 0 && times[k] < times[k - 1]) {
      throw Error(ErrorKind::NonMonotoneTime,
                  "dataset: timestamps decrease at row " + std::to_string(k));
    }
  }
  for (Eigen::Index k = 0; k < values.rows(); ++k) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (observed(k, j) && !std::isfinite(values(k, j))) {
        throw Error(ErrorKind::InvalidArgument,
                    "dataset: observed value is not finite at row " + std::to_string(k));
      }
    }
  }
}

MultiSeriesDataset MultiSeriesDataset::select_series(
    const std::vector<std::size_t>& series) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t k = 0; k < size(); ++k) {
    for (std::size_t j : series) {
      if (j >= series_count()) {
        throw Error(ErrorKind::InvalidArgument, "select_series: index out of range");
      }
      if (is_observed(k, j)) {
        rows.push_back(static_cast<Eigen::Index>(k));
        break;
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto q = static_cast<Eigen::Index>(series.size());
  std::vector<double> t(rows.size());
  Matrix v(n, q);
  Mask m(n, q);
  std::vector<std::string> nm;
  for (std::size_t j : series) nm.push_back(names[j]);
  for (Eigen::Index r = 0; r < n; ++r) {
    t[static_cast<std::size_t>(r)] = times[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
    for (Eigen::Index c = 0; c < q; ++c) {
      const auto src = static_cast<Eigen::Index>(series[static_cast<std::size_t>(c)]);
      v(r, c) = values(rows[static_cast<std::size_t>(r)], src);
      m(r, c) = observed(rows[static_cast<std::size_t>(r)], src);
    }
  }
  return MultiSeriesDataset(std::move(t), std::move(v), std::move(m), std::move(nm));
}

double MultiSeriesDataset::observed_mean(std::size_t series) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < size(); ++k) {
    if (is_observed(k, series)) {
      sum += value(k, series);
      ++count;
    }
  }
  if (count == 0) {
    throw Error(ErrorKind::EmptyData, "series " + names[series] + " has no observations");
  }
  return sum / static_cast<double>(count);
}

double MultiSeriesDataset::observed_variance(std::size_t series) const {
  const double mean = observed_mean(series);
  double ss = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < size(); ++k) {
    if (is_observed(k, series)) {
      const double d = value(k, series) - mean;
      ss += d * d;
      ++count;
    }
  }
  return count > 1 ? ss / static_cast<double>(count - 1) : 0.0;
}

std::vector<std::string> default_series_names(std::size_t p) {
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t j = 0; j < p; ++j) names.push_back("s" + std::to_string(j + 1));
  return names;
}

Standardization Standardization::fit(const MultiSeriesDataset& data) {
  const std::size_t p = data.series_count();
  Standardization out;
  out.offset.resize(static_cast<Eigen::Index>(p));
  out.scale.resize(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    out.offset(jj) = data.observed_mean(j);
    const double var = data.observed_variance(j);
    out.scale(jj) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return out;
}

Standardization Standardization::identity(std::size_t p) {
  const auto n = static_cast<Eigen::Index>(p);
  return {Vector::Zero(n), Vector::Ones(n)};
}

MultiSeriesDataset Standardization::apply(const MultiSeriesDataset& data) const {
  MultiSeriesDataset out = data;
  for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
    out.values.col(j) = (out.values.col(j).array() - offset(j)) / scale(j);
  }
  return out;
}

}  // namespace dmp
