#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dmp/dataset.hpp"
#include "dmp/filter_smoother.hpp"
#include "dmp/kernels.hpp"

namespace dmp {

// Dense O(N^3) Gaussian-process reference built directly on the closed-form
// cross-covariances. Used to cross-check the state-space path.

struct IndexedPoint {
  std::size_t series = 0;
  double time = 0.0;
};

/// Observed entries of a dataset flattened in (time, series) order.
struct IndexedObservationSet {
  std::vector<IndexedPoint> points;
  Vector values;
  Vector noise;  // tau2 of each entry's series
};

IndexedObservationSet observed_entries(const MultiSeriesDataset& data, const Vector& tau2);

Matrix dense_gram(std::span<const IndexedPoint> points, std::span<const MaternHyper> hypers,
                  const CouplingMatrix& coupling);

double dense_loglik(const MultiSeriesDataset& data, std::span<const MaternHyper> hypers,
                    const CouplingMatrix& coupling, const Vector& tau2);

struct DensePosterior {
  Vector mean;
  Vector variance;  // latent
};

DensePosterior dense_posterior(const MultiSeriesDataset& data,
                               std::span<const IndexedPoint> targets,
                               std::span<const MaternHyper> hypers,
                               const CouplingMatrix& coupling, const Vector& tau2);

/// Dense counterpart of predict_missing.
std::vector<Prediction> dense_predict_missing(const MultiSeriesDataset& data,
                                              std::span<const MaternHyper> hypers,
                                              const CouplingMatrix& coupling,
                                              const Vector& tau2);

}  // namespace dmp
