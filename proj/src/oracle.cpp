#include "dmp/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "dmp/error.hpp"

namespace dmp {

namespace {

Matrix cross_gram(std::span<const IndexedPoint> rows, std::span<const IndexedPoint> cols,
                  std::span<const MaternHyper> hypers, const Matrix& c) {
  Matrix g(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = cross_covariance(
          rows[a].time, cols[b].time, rows[a].series, cols[b].series, hypers, c);
    }
  }
  return g;
}

void check(const MultiSeriesDataset& data, std::span<const MaternHyper> hypers,
           const CouplingMatrix& coupling, const Vector& tau2) {
  shared_smoothness(hypers);
  if (data.series_count() != hypers.size() ||
      coupling.series() != static_cast<Eigen::Index>(hypers.size()) ||
      tau2.size() != static_cast<Eigen::Index>(hypers.size())) {
    throw Error(ErrorKind::InvalidArgument, "dense oracle: inconsistent series counts");
  }
}

}  // namespace

IndexedObservationSet observed_entries(const MultiSeriesDataset& data, const Vector& tau2) {
  IndexedObservationSet out;
  std::vector<double> values;
  std::vector<double> noise;
  for (std::size_t k = 0; k < data.size(); ++k) {
    for (std::size_t j = 0; j < data.series_count(); ++j) {
      if (!data.is_observed(k, j)) continue;
      out.points.push_back({j, data.times[k]});
      values.push_back(data.value(k, j));
      noise.push_back(tau2(static_cast<Eigen::Index>(j)));
    }
  }
  out.values = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  out.noise = Eigen::Map<const Vector>(noise.data(), static_cast<Eigen::Index>(noise.size()));
  return out;
}

Matrix dense_gram(std::span<const IndexedPoint> points, std::span<const MaternHyper> hypers,
                  const CouplingMatrix& coupling) {
  shared_smoothness(hypers);
  const Matrix c = coupling.covariance();
  Matrix g = cross_gram(points, points, hypers, c);
  return symmetrize(g);
}

double dense_loglik(const MultiSeriesDataset& data, std::span<const MaternHyper> hypers,
                    const CouplingMatrix& coupling, const Vector& tau2) {
  check(data, hypers, coupling, tau2);
  const IndexedObservationSet obs = observed_entries(data, tau2);
  if (obs.points.empty()) return 0.0;
  Matrix k = dense_gram(obs.points, hypers, coupling);
  k.diagonal() += obs.noise;
  return mvn_logpdf(obs.values, Vector::Zero(obs.values.size()), k);
}

DensePosterior dense_posterior(const MultiSeriesDataset& data,
                               std::span<const IndexedPoint> targets,
                               std::span<const MaternHyper> hypers,
                               const CouplingMatrix& coupling, const Vector& tau2) {
  check(data, hypers, coupling, tau2);
  const Matrix c = coupling.covariance();
  const IndexedObservationSet obs = observed_entries(data, tau2);
  const auto t = static_cast<Eigen::Index>(targets.size());
  DensePosterior out{Vector::Zero(t), Vector(t)};
  for (Eigen::Index a = 0; a < t; ++a) {
    const auto& pt = targets[static_cast<std::size_t>(a)];
    out.variance(a) = cross_covariance(pt.time, pt.time, pt.series, pt.series, hypers, c);
  }
  if (obs.points.empty() || t == 0) return out;

  Matrix k = symmetrize(cross_gram(obs.points, obs.points, hypers, c));
  k.diagonal() += obs.noise;
  const CholeskyFactor chol(k);
  const Matrix cross = cross_gram(obs.points, targets, hypers, c);  // n x t
  out.mean = cross.transpose() * chol.solve(obs.values);
  const Matrix white = chol.lower().triangularView<Eigen::Lower>().solve(cross);
  out.variance -= white.colwise().squaredNorm().transpose();
  out.variance = out.variance.cwiseMax(0.0);
  return out;
}

std::vector<Prediction> dense_predict_missing(const MultiSeriesDataset& data,
                                              std::span<const MaternHyper> hypers,
                                              const CouplingMatrix& coupling,
                                              const Vector& tau2) {
  check(data, hypers, coupling, tau2);
  std::vector<IndexedPoint> targets;
  for (std::size_t j = 0; j < data.series_count(); ++j) {
    for (std::size_t k = 0; k < data.size(); ++k) {
      if (!data.is_observed(k, j)) targets.push_back({j, data.times[k]});
    }
  }
  const DensePosterior post = dense_posterior(data, targets, hypers, coupling, tau2);
  std::vector<Prediction> out;
  out.reserve(targets.size());
  for (std::size_t a = 0; a < targets.size(); ++a) {
    const auto aa = static_cast<Eigen::Index>(a);
    Prediction pred;
    pred.time = targets[a].time;
    pred.series = targets[a].series;
    pred.mean = post.mean(aa);
    pred.var_latent = post.variance(aa);
    pred.var_predictive = pred.var_latent + tau2(static_cast<Eigen::Index>(pred.series));
    // recover the row index to read a held-out truth value
    const auto it = std::lower_bound(data.times.begin(), data.times.end(), pred.time);
    const auto k = static_cast<std::size_t>(it - data.times.begin());
    if (std::isfinite(data.value(k, pred.series))) pred.truth = data.value(k, pred.series);
    out.push_back(pred);
  }
  return out;
}

}  // namespace dmp
