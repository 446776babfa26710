#include "dmp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "dmp/error.hpp"

namespace dmp {

namespace {

Vector standard_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

}  // namespace

MultiSeriesDataset sample_path(const JointStateSpaceModel& model, std::span<const double> times,
                               const Vector& tau2, std::uint64_t seed) {
  const auto p = static_cast<Eigen::Index>(model.series_count());
  if (tau2.size() != p || (tau2.array() < 0.0).any()) {
    throw Error(ErrorKind::InvalidArgument, "sample_path: tau2 must hold p non-negative values");
  }
  if (times.empty()) throw Error(ErrorKind::EmptyData, "sample_path: no timestamps");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw Error(ErrorKind::NonMonotoneTime, "sample_path: times must be strictly increasing");
    }
  }
  std::mt19937_64 rng(seed);
  const auto n = static_cast<Eigen::Index>(times.size());
  Matrix values(n, p);
  const Vector noise_sd = tau2.array().sqrt();

  Vector state = sampling_factor(model.stationary_covariance()) *
                 standard_normal(rng, model.state_dim());
  double last_dt = -1.0;
  Matrix transition;
  Matrix noise_factor;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k > 0) {
      const double dt = times[static_cast<std::size_t>(k)] - times[static_cast<std::size_t>(k - 1)];
      if (dt != last_dt) {
        const Discretization step = discretize(model, dt);
        transition = step.transition;
        noise_factor = sampling_factor(step.process_noise);
        last_dt = dt;
      }
      state = transition * state + noise_factor * standard_normal(rng, model.state_dim());
    }
    const Vector eps = standard_normal(rng, p);
    for (Eigen::Index j = 0; j < p; ++j) {
      values(k, j) = state(model.position_index(static_cast<std::size_t>(j))) + noise_sd(j) * eps(j);
    }
  }
  return MultiSeriesDataset({times.begin(), times.end()}, std::move(values),
                            Mask::Constant(n, p, true));
}

MultiSeriesDataset synth_benchmark(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> times(kSynthPoints);
  for (double& t : times) t = uniform(rng);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.size() != kSynthPoints) {
    throw Error(ErrorKind::DuplicateTimestamp, "synth_benchmark: duplicate random design point");
  }
  const auto n = static_cast<Eigen::Index>(kSynthPoints);
  Matrix values(n, 2);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = times[static_cast<std::size_t>(k)];
    const double wave = std::cos(5.0 * std::numbers::pi * t);
    const double eps = normal(rng);
    const double eta = normal(rng);
    values(k, 0) = 0.2 * wave - 2.0 * t + 0.1 * eps;
    values(k, 1) = t - 0.5 * wave + 0.04 * eta;
  }
  Mask observed = Mask::Constant(n, 2, true);
  observed.col(1).tail(static_cast<Eigen::Index>(kSynthWithheld)).setConstant(false);
  return MultiSeriesDataset(std::move(times), std::move(values), std::move(observed), {"x1", "x2"});
}

}  // namespace dmp
