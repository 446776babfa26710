#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "dmp/dataset.hpp"
#include "dmp/ssm.hpp"

namespace dmp {

struct FilterResult {
  std::vector<Vector> predicted_means;  // m_k^-
  std::vector<Matrix> predicted_covs;   // P_k^-
  std::vector<Vector> filtered_means;
  std::vector<Matrix> filtered_covs;
  /// transitions[k] propagates the state from t_{k-1} to t_k; entry 0 is unused.
  std::vector<Matrix> transitions;
  Vector observation_noise;  // tau2 used by the filter
  double loglik = 0.0;
};

struct SmootherResult {
  std::vector<Vector> means;
  std::vector<Matrix> covs;
};

/// Kalman filter started from the stationary prior N(0, Sigma_inf) at t_0.
///
/// At each timestamp only the observed series enter the update; steps with
/// nothing observed are predict-only. `tau2` holds one observation-noise
/// variance per series.
FilterResult kalman_filter(const JointStateSpaceModel& model, const MultiSeriesDataset& data,
                           const Vector& tau2);

/// Log marginal likelihood only; does not keep the per-step history.
double kalman_loglik(const JointStateSpaceModel& model, const MultiSeriesDataset& data,
                     const Vector& tau2);

SmootherResult rts_smooth(const FilterResult& filtered, const JointStateSpaceModel& model,
                          const MultiSeriesDataset& data);

/// Smoothed latent position mean and variance for every (time, series).
struct PositionPosterior {
  Matrix mean;      // N x p
  Matrix variance;  // N x p, latent (no observation noise)
};

PositionPosterior smoothed_positions(const JointStateSpaceModel& model,
                                     const MultiSeriesDataset& data, const Vector& tau2);

struct Prediction {
  double time = 0.0;
  std::size_t series = 0;
  double mean = 0.0;
  double var_latent = 0.0;      // variance of x_j(t)
  double var_predictive = 0.0;  // var_latent + tau2_j, for a noisy reading
  std::optional<double> truth;  // held-out value when the dataset carries one
};

/// Posterior predictions at every unobserved (time, series) entry.
std::vector<Prediction> predict_missing(const JointStateSpaceModel& model,
                                        const MultiSeriesDataset& data, const Vector& tau2);

/// Builds predictions for the unobserved entries from a position posterior.
std::vector<Prediction> collect_predictions(const MultiSeriesDataset& data,
                                            const PositionPosterior& posterior,
                                            const Vector& tau2);

}  // namespace dmp
