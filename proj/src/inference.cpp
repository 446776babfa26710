#include "dmp/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "dmp/error.hpp"
#include "dmp/filter_smoother.hpp"
#include "dmp/optimize.hpp"

namespace dmp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNoiseFloorFraction = 1e-10;

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// Lag-one autocorrelation turned into an exponential-decay length-scale.
double autocorrelation_guess(const MultiSeriesDataset& single) {
  const std::size_t n = single.size();
  const double mean = single.observed_mean(0);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = single.value(k, 0) - mean;
    den += d * d;
    if (k > 0) num += d * (single.value(k - 1, 0) - mean);
  }
  const double rho = std::clamp(den > 0.0 ? num / den : 0.5, 0.01, 0.99);
  const double mean_gap = (single.times.back() - single.times.front()) / static_cast<double>(n - 1);
  return -mean_gap / std::log(rho);
}

// Half the 95% chi-square quantile with two degrees of freedom.
constexpr double kWhiteNoiseMargin = 3.0;

/// Zero-mean white-noise log-likelihood at the variance MLE.
double white_noise_loglik(const MultiSeriesDataset& single) {
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < single.size(); ++k) {
    if (!single.is_observed(k, 0)) continue;
    ss += single.value(k, 0) * single.value(k, 0);
    ++n;
  }
  const double v = ss / static_cast<double>(n);
  return -0.5 * static_cast<double>(n) * (std::log(2.0 * std::numbers::pi * v) + 1.0);
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

void InferenceConfig::validate() const {
  if (sources < 1) throw Error(ErrorKind::InvalidArgument, "R must be >= 1");
  if (stage2.chain_length <= stage2.burn_in) {
    throw Error(ErrorKind::InvalidArgument, "chain length must exceed burn-in");
  }
  if (!(stage2.loading_step > 0.0) || !(stage2.log_tau2_step > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "proposal scales must be > 0");
  }
  if (stage2.thin == 0) throw Error(ErrorKind::InvalidArgument, "thinning must be >= 1");
  if (stage1.restarts < 1 || stage1.max_iterations < 1 || !(stage1.tolerance > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid stage-1 optimizer settings");
  }
  if (!(priors.loading_scale_factor > 0.0) || !(priors.tau2_center_fraction > 0.0) ||
      !(priors.log_tau2_sd > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "prior settings must be positive");
  }
}

std::vector<SeriesFit> fit_lengthscales(const MultiSeriesDataset& data, Smoothness nu,
                                        const Stage1Options& options) {
  std::vector<SeriesFit> fits;
  const double unit_var = unit_position_variance(nu);
  for (std::size_t j = 0; j < data.series_count(); ++j) {
    const MultiSeriesDataset single = data.select_series({j});
    if (single.observed_count() < 5) {
      throw Error(ErrorKind::TooFewObservations,
                  "series " + data.names[j] + " has fewer than 5 observations");
    }
    const double var = single.observed_variance(0);
    if (!(var > 0.0)) {
      throw Error(ErrorKind::DegenerateSeries, "series " + data.names[j] + " is constant");
    }
    const double span = single.times.back() - single.times.front();
    double min_gap = span;
    for (std::size_t k = 1; k < single.size(); ++k) {
      min_gap = std::min(min_gap, single.times[k] - single.times[k - 1]);
    }
    const std::array<double, 2> log_ell_bounds{std::log(1e-2 * min_gap), std::log(1e2 * span)};
    const std::array<double, 2> log_var_bounds{std::log(1e-8 * var), std::log(1e3 * var)};
    const std::array<double, 2> log_tau_bounds{std::log(kNoiseFloorFraction * var),
                                               std::log(1e2 * var)};

    const auto objective = [&](const Vector& theta) {
      if (theta(0) < log_ell_bounds[0] || theta(0) > log_ell_bounds[1] ||
          theta(1) < log_var_bounds[0] || theta(1) > log_var_bounds[1] ||
          theta(2) < log_tau_bounds[0] || theta(2) > log_tau_bounds[1]) {
        return std::numeric_limits<double>::infinity();
      }
      try {
        const MaternHyper hyper(nu, std::exp(theta(0)));
        const JointStateSpaceModel model(
            {hyper}, CouplingMatrix(Matrix::Constant(1, 1, std::sqrt(std::exp(theta(1)) / unit_var))));
        return -kalman_loglik(model, single, Vector::Constant(1, std::exp(theta(2))));
      } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
      }
    };

    std::vector<double> ell_starts{span / 20.0, span / 5.0, span / 2.0,
                                   autocorrelation_guess(single)};
    const auto starts = static_cast<std::size_t>(std::clamp(options.restarts, 1, 4));
    // the data-driven guess is always kept
    std::vector<double> chosen(ell_starts.begin(), ell_starts.begin() + static_cast<long>(starts - 1));
    chosen.push_back(ell_starts.back());

    NelderMeadOptions nm;
    nm.max_iterations = options.max_iterations;
    nm.f_tolerance = options.tolerance;
    nm.x_tolerance = std::sqrt(options.tolerance);
    NelderMeadResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (double ell0 : chosen) {
      Vector x0(3);
      x0 << std::log(std::clamp(ell0, 1.01 * std::exp(log_ell_bounds[0]),
                                0.99 * std::exp(log_ell_bounds[1]))),
          std::log(0.9 * var), std::log(0.1 * var);
      NelderMeadResult run = nelder_mead(objective, x0, nm);
      if (run.value < best.value) best = run;
    }
    if (!std::isfinite(best.value)) {
      throw Error(ErrorKind::OptimizerFailed,
                  "stage-1 fit diverged for every restart on series " + data.names[j]);
    }
    nm.initial_step = 0.1;
    NelderMeadResult polished = nelder_mead(objective, best.x, nm);
    if (polished.value < best.value) best = polished;

    SeriesFit fit;
    fit.ell = std::exp(best.x(0));
    fit.marginal_variance = std::exp(best.x(1));
    fit.tau2 = std::exp(best.x(2));
    fit.loglik = -best.value;
    const double edge = std::log(1.05);
    if (fit.tau2 > 10.0 * fit.marginal_variance) {
      fit.weakly_identified = true;
      fit.warning = "observation noise dominates the signal; length-scale is weakly identified";
    } else if (best.x(0) - log_ell_bounds[0] < edge || log_ell_bounds[1] - best.x(0) < edge) {
      fit.weakly_identified = true;
      fit.warning = "length-scale estimate sits at the search boundary";
    } else if (fit.ell < min_gap) {
      fit.weakly_identified = true;
      fit.warning = "length-scale is below the sampling resolution";
    } else if (fit.loglik - white_noise_loglik(single) < kWhiteNoiseMargin) {
      fit.weakly_identified = true;
      fit.warning = "fit is not distinguishable from white noise";
    }
    fits.push_back(fit);
  }
  return fits;
}

CouplingPosterior::CouplingPosterior(const MultiSeriesDataset& data,
                                     std::vector<MaternHyper> hypers, Eigen::Index sources,
                                     const PriorOptions& priors)
    : data_(data),
      model_(std::move(hypers),
             CouplingMatrix(Matrix::Identity(static_cast<Eigen::Index>(data.series_count()),
                                             static_cast<Eigen::Index>(data.series_count())))),
      sources_(sources),
      priors_(priors) {
  const auto p = static_cast<Eigen::Index>(data_.series_count());
  if (model_.series_count() != data_.series_count()) {
    throw Error(ErrorKind::InvalidArgument, "one length-scale per series is required");
  }
  if (sources_ < 1 || sources_ > p) {
    throw Error(ErrorKind::InvalidArgument, "R must satisfy 1 <= R <= p");
  }
  series_var_.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double v = data_.observed_variance(static_cast<std::size_t>(j));
    series_var_(j) = v > 0.0 ? v : 1.0;
  }
  pooled_sd_ = std::sqrt(series_var_.mean());
  noise_floor_ = kNoiseFloorFraction * series_var_;
}

double CouplingPosterior::log_prior(const ChainState& state) const {
  const double sd_l = priors_.loading_scale_factor * pooled_sd_;
  double lp = 0.0;
  for (Eigen::Index a = 0; a < state.loading.size(); ++a) {
    lp += normal_logpdf(state.loading.data()[a], 0.0, sd_l);
  }
  for (Eigen::Index j = 0; j < state.log_tau2.size(); ++j) {
    lp += normal_logpdf(state.log_tau2(j),
                        std::log(priors_.tau2_center_fraction * series_var_(j)),
                        priors_.log_tau2_sd);
  }
  return lp;
}

double CouplingPosterior::log_likelihood(const ChainState& state) const {
  const Vector tau2 = state.log_tau2.array().exp();
  if ((tau2.array() < noise_floor_.array()).any() || !state.loading.allFinite()) return kNegInf;
  try {
    const JointStateSpaceModel model = model_.with_coupling(CouplingMatrix(state.loading));
    return kalman_loglik(model, data_, tau2);
  } catch (const Error&) {
    return kNegInf;
  }
}

double CouplingPosterior::log_density(const ChainState& state) const {
  const double ll = log_likelihood(state);
  if (!std::isfinite(ll)) return kNegInf;
  return ll + log_prior(state);
}

ChainState CouplingPosterior::initial_state(const Vector& tau2_seed) const {
  const auto p = static_cast<Eigen::Index>(data_.series_count());
  // pairwise-complete correlation of the observed values
  Vector mean(p);
  for (Eigen::Index j = 0; j < p; ++j) mean(j) = data_.observed_mean(static_cast<std::size_t>(j));
  Matrix corr = Matrix::Identity(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a + 1; b < p; ++b) {
      double sab = 0.0, saa = 0.0, sbb = 0.0;
      std::size_t count = 0;
      for (std::size_t k = 0; k < data_.size(); ++k) {
        if (!data_.is_observed(k, static_cast<std::size_t>(a)) ||
            !data_.is_observed(k, static_cast<std::size_t>(b))) {
          continue;
        }
        const double da = data_.value(k, static_cast<std::size_t>(a)) - mean(a);
        const double db = data_.value(k, static_cast<std::size_t>(b)) - mean(b);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
        ++count;
      }
      if (count >= 2 && saa > 0.0 && sbb > 0.0) {
        corr(a, b) = corr(b, a) = sab / std::sqrt(saa * sbb);
      }
    }
  }
  const double unit_var = unit_position_variance(model_.smoothness());
  Vector sd(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double signal = std::max(series_var_(j) - tau2_seed(j), 0.1 * series_var_(j));
    sd(j) = std::sqrt(signal / unit_var);
  }
  const Matrix c0 = sd.asDiagonal() * corr * sd.asDiagonal();
  ChainState state;
  state.loading = CouplingMatrix::from_covariance(c0, sources_).loading();
  state.log_tau2 = tau2_seed.cwiseMax(noise_floor_ * 10.0).array().log();
  return state;
}

PosteriorSamples mh_sample(const MultiSeriesDataset& data, std::span<const SeriesFit> fits,
                           Smoothness nu, Eigen::Index sources, const Stage2Options& options,
                           const PriorOptions& priors) {
  const std::size_t p = data.series_count();
  if (fits.size() != p) {
    throw Error(ErrorKind::InvalidArgument, "mh_sample: one stage-1 fit per series required");
  }
  if (options.burn_in > options.chain_length) {
    throw Error(ErrorKind::InvalidArgument, "mh_sample: burn-in exceeds chain length");
  }
  if (!(options.loading_step > 0.0) || !(options.log_tau2_step > 0.0) || options.thin == 0) {
    throw Error(ErrorKind::InvalidArgument, "mh_sample: invalid proposal settings");
  }
  std::vector<MaternHyper> hypers;
  Vector tau2_seed(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    hypers.emplace_back(nu, fits[j].ell);
    tau2_seed(static_cast<Eigen::Index>(j)) = fits[j].tau2;
  }
  const CouplingPosterior posterior(data, std::move(hypers), sources, priors);

  PosteriorSamples out;
  const std::size_t blocks = p + 1;
  std::vector<double> log_scale(blocks, std::log(options.loading_step * posterior.pooled_sd()));
  log_scale.back() = std::log(options.log_tau2_step);
  if (options.chain_length == 0) {
    for (double s : log_scale) out.proposal_scales.push_back(std::exp(s));
    return out;
  }

  ChainState state = posterior.initial_state(tau2_seed);
  double current = posterior.log_density(state);
  if (!std::isfinite(current)) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "mh_sample: initial state has non-finite log-posterior");
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  const Eigen::Index r = posterior.sources();

  for (std::size_t it = 0; it < options.chain_length; ++it) {
    const bool burning = it < options.burn_in;
    for (std::size_t b = 0; b < blocks; ++b) {
      ChainState candidate = state;
      const double step = std::exp(log_scale[b]);
      if (b < p) {
        for (Eigen::Index c = 0; c < r; ++c) {
          candidate.loading(static_cast<Eigen::Index>(b), c) += step * normal(rng);
        }
      } else {
        for (Eigen::Index j = 0; j < candidate.log_tau2.size(); ++j) {
          candidate.log_tau2(j) += step * normal(rng);
        }
      }
      const double proposal = posterior.log_density(candidate);
      const bool accept = std::isfinite(proposal) && std::log(uniform(rng)) < proposal - current;
      if (accept) {
        state = std::move(candidate);
        current = proposal;
      }
      if (burning) {
        if (options.adapt) {
          const double gain = std::pow(static_cast<double>(it + 1), -0.6);
          log_scale[b] += gain * ((accept ? 1.0 : 0.0) - 0.25);
        }
      } else {
        ++proposed;
        if (accept) ++accepted;
      }
    }
    if (!burning && (it - options.burn_in) % options.thin == 0) {
      out.loadings.push_back(state.loading);
      out.tau2.push_back(state.log_tau2.array().exp());
    }
  }
  if (proposed > 0) {
    out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  }
  for (double s : log_scale) out.proposal_scales.push_back(std::exp(s));
  return out;
}

PosteriorSummary summarize(const PosteriorSamples& samples) {
  if (samples.loadings.empty()) {
    throw Error(ErrorKind::EmptyChain, "summarize: no post burn-in draws");
  }
  const std::size_t draws = samples.loadings.size();
  const Eigen::Index p = samples.loadings.front().rows();
  PosteriorSummary out;
  out.draws = draws;
  out.acceptance_rate = samples.acceptance_rate;
  out.mean_c = Matrix::Zero(p, p);
  out.mean_rho = Matrix::Zero(p, p);
  out.mean_tau2 = Vector::Zero(p);
  std::vector<std::vector<double>> rho_entries(static_cast<std::size_t>(p * p));
  for (std::size_t d = 0; d < draws; ++d) {
    const Matrix c = samples.loadings[d] * samples.loadings[d].transpose();
    const Matrix rho = correlation_from_C(c);
    out.mean_c += c;
    out.mean_rho += rho;
    out.mean_tau2 += samples.tau2[d];
    for (Eigen::Index a = 0; a < p * p; ++a) {
      rho_entries[static_cast<std::size_t>(a)].push_back(rho.data()[a]);
    }
  }
  const double inv = 1.0 / static_cast<double>(draws);
  out.mean_c *= inv;
  out.mean_rho *= inv;
  out.mean_tau2 *= inv;
  out.rho_lower.resize(p, p);
  out.rho_upper.resize(p, p);
  for (Eigen::Index a = 0; a < p * p; ++a) {
    out.rho_lower.data()[a] = quantile(rho_entries[static_cast<std::size_t>(a)], 0.025);
    out.rho_upper.data()[a] = quantile(rho_entries[static_cast<std::size_t>(a)], 0.975);
  }
  out.last_loading = samples.loadings.back();
  out.last_tau2 = samples.tau2.back();
  return out;
}

PredictiveParameters predictive_parameters(std::span<const SeriesFit> fits,
                                           const PosteriorSummary& summary, Smoothness nu,
                                           bool use_last_sample) {
  PredictiveParameters out;
  for (const auto& f : fits) out.hypers.emplace_back(nu, f.ell);
  if (use_last_sample) {
    out.coupling = CouplingMatrix(summary.last_loading);
    out.tau2 = summary.last_tau2;
  } else {
    out.coupling = CouplingMatrix::from_covariance(summary.mean_c);
    out.tau2 = summary.mean_tau2;
  }
  if (out.coupling.series() != static_cast<Eigen::Index>(out.hypers.size())) {
    throw Error(ErrorKind::InvalidArgument, "posterior summary does not match stage-1 fits");
  }
  return out;
}

}  // namespace dmp
