#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmp/dataset.hpp"
#include "dmp/kernels.hpp"
#include "dmp/ssm.hpp"

namespace dmp {

struct Stage1Options {
  int restarts = 4;            // starting points tried, at most 4
  int max_iterations = 2000;   // per simplex run
  double tolerance = 1e-8;
};

struct Stage2Options {
  std::size_t chain_length = 0;  // total sweeps, burn-in included
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  double loading_step = 0.05;    // initial proposal sd for L rows, times the pooled sd
  double log_tau2_step = 0.1;    // initial proposal sd for log tau2
  bool adapt = true;             // Robbins-Monro scaling during burn-in
  std::uint64_t seed = 1;
};

/// Prior settings for the coupling sampler.
///   L_ab      ~ Normal(0, (loading_scale_factor * pooled sd)^2)
///   log tau_j ~ Normal(log(tau2_center_fraction * var_j), log_tau2_sd^2)
struct PriorOptions {
  double loading_scale_factor = 2.0;
  double tau2_center_fraction = 0.01;
  double log_tau2_sd = 1.5;
};

struct InferenceConfig {
  Smoothness nu = Smoothness::Half;
  Eigen::Index sources = 1;  // R
  Stage1Options stage1;
  Stage2Options stage2;
  PriorOptions priors;

  /// R >= 1, chain_length > burn_in, positive steps and thinning.
  void validate() const;
};

struct SeriesFit {
  double ell = 0.0;
  double marginal_variance = 0.0;  // stationary variance of x_j
  double tau2 = 0.0;
  double loglik = 0.0;
  bool weakly_identified = false;
  std::string warning;
};

/// Stage 1: independent univariate maximum likelihood over
/// (log l, log sigma^2, log tau^2) with a multi-start simplex search.
std::vector<SeriesFit> fit_lengthscales(const MultiSeriesDataset& data, Smoothness nu,
                                        const Stage1Options& options = {});

struct ChainState {
  Matrix loading;  // p x R
  Vector log_tau2;
};

/// Unnormalized log-posterior over (L, log tau2) with fixed length-scales.
class CouplingPosterior {
 public:
  CouplingPosterior(const MultiSeriesDataset& data, std::vector<MaternHyper> hypers,
                    Eigen::Index sources, const PriorOptions& priors = {});

  double log_prior(const ChainState& state) const;
  /// Kalman log-likelihood; -inf when the state is numerically infeasible.
  double log_likelihood(const ChainState& state) const;
  double log_density(const ChainState& state) const;

  /// Loading from the empirical correlation of the series, truncated to R.
  ChainState initial_state(const Vector& tau2_seed) const;

  std::size_t series_count() const noexcept { return data_.series_count(); }
  Eigen::Index sources() const noexcept { return sources_; }
  double pooled_sd() const noexcept { return pooled_sd_; }
  const std::vector<MaternHyper>& hypers() const noexcept { return model_.hypers(); }

 private:
  MultiSeriesDataset data_;
  JointStateSpaceModel model_;
  Eigen::Index sources_;
  PriorOptions priors_;
  double pooled_sd_ = 1.0;
  Vector series_var_;
  Vector noise_floor_;
};

struct PosteriorSamples {
  std::vector<Matrix> loadings;  // post burn-in, thinned
  std::vector<Vector> tau2;
  std::optional<double> acceptance_rate;  // absent when nothing was proposed post burn-in
  std::vector<double> proposal_scales;    // final per-block scales
};

/// Stage 2: blocked random-walk Metropolis-Hastings over the rows of L and
/// the vector log tau2, with the stage-1 length-scales held fixed. One
/// iteration is a sweep over all p + 1 blocks.
PosteriorSamples mh_sample(const MultiSeriesDataset& data, std::span<const SeriesFit> fits,
                           Smoothness nu, Eigen::Index sources, const Stage2Options& options,
                           const PriorOptions& priors = {});

struct PosteriorSummary {
  std::size_t draws = 0;
  std::optional<double> acceptance_rate;
  Matrix mean_c;
  Matrix mean_rho;   // average of per-draw correlations
  Matrix rho_lower;  // 2.5% quantile
  Matrix rho_upper;  // 97.5% quantile
  Vector mean_tau2;
  Matrix last_loading;
  Vector last_tau2;
};

PosteriorSummary summarize(const PosteriorSamples& samples);

/// Model parameters used for prediction after inference.
struct PredictiveParameters {
  std::vector<MaternHyper> hypers;
  CouplingMatrix coupling;
  Vector tau2;
};

PredictiveParameters predictive_parameters(std::span<const SeriesFit> fits,
                                           const PosteriorSummary& summary, Smoothness nu,
                                           bool use_last_sample);

}  // namespace dmp
