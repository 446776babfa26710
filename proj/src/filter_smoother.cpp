#include "dmp/filter_smoother.hpp"

#include <cmath>
#include <numbers>

#include "dmp/error.hpp"

namespace dmp {

namespace {

void check_inputs(const JointStateSpaceModel& model, const MultiSeriesDataset& data,
                  const Vector& tau2) {
  if (data.size() == 0) throw Error(ErrorKind::EmptyData, "kalman_filter: no timestamps");
  if (data.series_count() != model.series_count()) {
    throw Error(ErrorKind::InvalidArgument, "kalman_filter: model and data disagree on p");
  }
  if (tau2.size() != static_cast<Eigen::Index>(model.series_count()) || !tau2.allFinite() ||
      (tau2.array() < 0.0).any()) {
    throw Error(ErrorKind::InvalidArgument,
                "kalman_filter: tau2 must hold one finite non-negative value per series");
  }
}

/// Caches the discretization of the previous gap; regular grids reuse it.
class StepDiscretizer {
 public:
  explicit StepDiscretizer(const JointStateSpaceModel& model) : model_(model) {}

  const Discretization& at(double dt) {
    if (dt != last_dt_) {
      current_ = discretize(model_, dt);
      last_dt_ = dt;
    }
    return current_;
  }

 private:
  const JointStateSpaceModel& model_;
  double last_dt_ = -1.0;
  Discretization current_;
};

/// Observed series at step k and their position indices in the state.
void observed_positions(const JointStateSpaceModel& model, const MultiSeriesDataset& data,
                        std::size_t k, std::vector<Eigen::Index>& rows,
                        std::vector<Eigen::Index>& cols) {
  rows.clear();
  cols.clear();
  for (std::size_t j = 0; j < data.series_count(); ++j) {
    if (data.is_observed(k, j)) {
      rows.push_back(static_cast<Eigen::Index>(j));
      cols.push_back(model.position_index(j));
    }
  }
}

/// Measurement update in Joseph form. Returns the log-density contribution.
double update(const JointStateSpaceModel& model, const MultiSeriesDataset& data,
              const Vector& tau2, std::size_t k, Vector& mean, Matrix& cov) {
  std::vector<Eigen::Index> rows;
  std::vector<Eigen::Index> cols;
  observed_positions(model, data, k, rows, cols);
  if (rows.empty()) return 0.0;
  const auto m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index dim = model.state_dim();

  Vector innovation(m);
  Matrix s(m, m);
  Matrix cross(dim, m);  // P H^T
  Vector noise(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    innovation(a) = data.values(static_cast<Eigen::Index>(k), rows[static_cast<std::size_t>(a)]) -
                    mean(cols[static_cast<std::size_t>(a)]);
    noise(a) = tau2(rows[static_cast<std::size_t>(a)]);
    cross.col(a) = cov.col(cols[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < m; ++b) {
      s(a, b) = cov(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
    }
  }
  s.diagonal() += noise;

  const CholeskyFactor chol(symmetrize(s));
  const Vector z = chol.whiten(innovation);
  const double logdens =
      -0.5 * (static_cast<double>(m) * std::log(2.0 * std::numbers::pi) +
              chol.log_determinant() + z.squaredNorm());

  const Matrix gain = chol.solve(Matrix(cross.transpose())).transpose();  // dim x m
  mean += gain * innovation;

  Matrix ikh = Matrix::Identity(dim, dim);
  for (Eigen::Index a = 0; a < m; ++a) ikh.col(cols[static_cast<std::size_t>(a)]) -= gain.col(a);
  Matrix updated = ikh * cov * ikh.transpose();
  updated.noalias() += gain * noise.asDiagonal() * gain.transpose();
  cov = symmetrize(updated);
  return logdens;
}

template <class Recorder>
double run_filter(const JointStateSpaceModel& model, const MultiSeriesDataset& data,
                  const Vector& tau2, Recorder&& record) {
  check_inputs(model, data, tau2);
  StepDiscretizer discretizer(model);
  Vector mean = Vector::Zero(model.state_dim());
  Matrix cov = model.stationary_covariance();
  double loglik = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Matrix* transition = nullptr;
    if (k > 0) {
      const Discretization& step = discretizer.at(data.times[k] - data.times[k - 1]);
      mean = step.transition * mean;
      cov = symmetrize(step.transition * cov * step.transition.transpose() + step.process_noise);
      transition = &step.transition;
    }
    const Vector prior_mean = mean;
    const Matrix prior_cov = cov;
    loglik += update(model, data, tau2, k, mean, cov);
    record(transition, prior_mean, prior_cov, mean, cov);
  }
  if (!std::isfinite(loglik)) {
    throw Error(ErrorKind::NotPositiveDefinite, "kalman_filter: non-finite log-likelihood");
  }
  return loglik;
}

}  // namespace

FilterResult kalman_filter(const JointStateSpaceModel& model, const MultiSeriesDataset& data,
                           const Vector& tau2) {
  FilterResult out;
  const std::size_t n = data.size();
  out.predicted_means.reserve(n);
  out.predicted_covs.reserve(n);
  out.filtered_means.reserve(n);
  out.filtered_covs.reserve(n);
  out.transitions.reserve(n);
  const Eigen::Index dim = model.state_dim();
  out.observation_noise = tau2;
  out.loglik = run_filter(model, data, tau2,
                          [&](const Matrix* transition, const Vector& pm, const Matrix& pc,
                              const Vector& fm, const Matrix& fc) {
                            out.transitions.push_back(transition ? *transition
                                                                 : Matrix::Identity(dim, dim));
                            out.predicted_means.push_back(pm);
                            out.predicted_covs.push_back(pc);
                            out.filtered_means.push_back(fm);
                            out.filtered_covs.push_back(fc);
                          });
  return out;
}

double kalman_loglik(const JointStateSpaceModel& model, const MultiSeriesDataset& data,
                     const Vector& tau2) {
  return run_filter(model, data, tau2,
                    [](const Matrix*, const Vector&, const Matrix&, const Vector&,
                       const Matrix&) {});
}

SmootherResult rts_smooth(const FilterResult& filtered, const JointStateSpaceModel& model,
                          const MultiSeriesDataset& data) {
  const std::size_t n = filtered.filtered_means.size();
  if (n != data.size() || n == 0) {
    throw Error(ErrorKind::InvalidArgument, "rts_smooth: filter result does not match data");
  }
  if (filtered.filtered_means.front().size() != model.state_dim()) {
    throw Error(ErrorKind::InvalidArgument, "rts_smooth: filter result does not match model");
  }
  const Vector& tau2 = filtered.observation_noise;
  if (tau2.size() != static_cast<Eigen::Index>(model.series_count())) {
    throw Error(ErrorKind::InvalidArgument, "rts_smooth: filter result lacks observation noise");
  }
  // Backward adjoint recursion (Bierman form). The adjoint (lambda, Lambda)
  // carries the information from steps after k; only innovation covariances
  // are factorized, never the predicted state covariance.
  const Eigen::Index dim = model.state_dim();
  SmootherResult out;
  out.means.resize(n);
  out.covs.resize(n);
  Vector lambda = Vector::Zero(dim);
  Matrix info = Matrix::Zero(dim, dim);
  std::vector<Eigen::Index> rows;
  std::vector<Eigen::Index> cols;
  for (std::size_t k = n; k-- > 0;) {
    const Vector& mp = filtered.predicted_means[k];
    const Matrix& pp = filtered.predicted_covs[k];
    observed_positions(model, data, k, rows, cols);
    const auto m = static_cast<Eigen::Index>(rows.size());
    if (m > 0) {
      Matrix s(m, m);
      Matrix cross(dim, m);  // P^- H^T
      Vector innovation(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::Index ca = cols[static_cast<std::size_t>(a)];
        innovation(a) = data.values(static_cast<Eigen::Index>(k), rows[static_cast<std::size_t>(a)]) - mp(ca);
        cross.col(a) = pp.col(ca);
        for (Eigen::Index b = 0; b < m; ++b) s(a, b) = pp(ca, cols[static_cast<std::size_t>(b)]);
        s(a, a) += tau2(rows[static_cast<std::size_t>(a)]);
      }
      const CholeskyFactor chol(symmetrize(s));
      const Matrix gain = chol.solve(Matrix(cross.transpose())).transpose();  // dim x m
      const Vector weighted = chol.solve(innovation);                           // S^-1 v
      const Matrix s_inv = chol.solve(Matrix(Matrix::Identity(m, m)));
      // C = I - K H
      Matrix c = Matrix::Identity(dim, dim);
      for (Eigen::Index a = 0; a < m; ++a) c.col(cols[static_cast<std::size_t>(a)]) -= gain.col(a);
      Vector next = c.transpose() * lambda;
      Matrix next_info = c.transpose() * info * c;
      for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::Index ca = cols[static_cast<std::size_t>(a)];
        next(ca) -= weighted(a);
        for (Eigen::Index b = 0; b < m; ++b) next_info(ca, cols[static_cast<std::size_t>(b)]) += s_inv(a, b);
      }
      lambda = std::move(next);
      info = symmetrize(next_info);
    }
    out.means[k] = mp - pp * lambda;
    out.covs[k] = symmetrize(pp - pp * info * pp);
    if (k > 0) {
      const Matrix& a = filtered.transitions[k];
      lambda = a.transpose() * lambda;
      info = a.transpose() * info * a;
    }
  }
  out.means[n - 1] = filtered.filtered_means[n - 1];
  out.covs[n - 1] = filtered.filtered_covs[n - 1];
  return out;
}

PositionPosterior smoothed_positions(const JointStateSpaceModel& model,
                                     const MultiSeriesDataset& data, const Vector& tau2) {
  const FilterResult filtered = kalman_filter(model, data, tau2);
  const SmootherResult smoothed = rts_smooth(filtered, model, data);
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = static_cast<Eigen::Index>(data.series_count());
  PositionPosterior out{Matrix(n, p), Matrix(n, p)};
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const Eigen::Index pos = model.position_index(static_cast<std::size_t>(j));
      out.mean(k, j) = smoothed.means[static_cast<std::size_t>(k)](pos);
      out.variance(k, j) = std::max(smoothed.covs[static_cast<std::size_t>(k)](pos, pos), 0.0);
    }
  }
  return out;
}

std::vector<Prediction> collect_predictions(const MultiSeriesDataset& data,
                                            const PositionPosterior& posterior,
                                            const Vector& tau2) {
  std::vector<Prediction> out;
  for (std::size_t j = 0; j < data.series_count(); ++j) {
    for (std::size_t k = 0; k < data.size(); ++k) {
      if (data.is_observed(k, j)) continue;
      const auto kk = static_cast<Eigen::Index>(k);
      const auto jj = static_cast<Eigen::Index>(j);
      Prediction pred;
      pred.time = data.times[k];
      pred.series = j;
      pred.mean = posterior.mean(kk, jj);
      pred.var_latent = posterior.variance(kk, jj);
      pred.var_predictive = pred.var_latent + tau2(jj);
      if (std::isfinite(data.value(k, j))) pred.truth = data.value(k, j);
      out.push_back(pred);
    }
  }
  return out;
}

std::vector<Prediction> predict_missing(const JointStateSpaceModel& model,
                                        const MultiSeriesDataset& data, const Vector& tau2) {
  check_inputs(model, data, tau2);
  if (data.observed_count() == data.size() * data.series_count()) return {};
  return collect_predictions(data, smoothed_positions(model, data, tau2), tau2);
}

}  // namespace dmp
