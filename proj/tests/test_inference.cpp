#include <doctest.h>

#include <cmath>

#include "dmp/error.hpp"
#include "dmp/inference.hpp"
#include "dmp/simulate.hpp"
#include "support.hpp"

using namespace dmp;

namespace {

MultiSeriesDataset simulate_ou(double ell, double variance, double tau2, std::size_t n, double dt,
                               std::uint64_t seed) {
  Matrix l(1, 1);
  l << std::sqrt(variance);
  const JointStateSpaceModel model({MaternHyper(Smoothness::Half, ell)}, CouplingMatrix(l));
  std::vector<double> times(n);
  for (std::size_t k = 0; k < n; ++k) times[k] = static_cast<double>(k) * dt;
  return sample_path(model, times, Vector::Constant(1, tau2), seed);
}

MultiSeriesDataset simulate_correlated(double rho, std::size_t n, std::uint64_t seed) {
  Matrix c(2, 2);
  c << 1, rho, rho, 1;
  const JointStateSpaceModel model({MaternHyper(Smoothness::Half, 1.0), MaternHyper(Smoothness::Half, 1.5)},
                                   CouplingMatrix(cholesky(c)));
  std::vector<double> times(n);
  for (std::size_t k = 0; k < n; ++k) times[k] = 0.25 * static_cast<double>(k);
  return sample_path(model, times, Vector::Constant(2, 0.01), seed);
}

std::vector<SeriesFit> fits_with(const std::vector<double>& ells, const std::vector<double>& tau2) {
  std::vector<SeriesFit> fits;
  for (std::size_t j = 0; j < ells.size(); ++j) {
    SeriesFit f;
    f.ell = ells[j];
    f.marginal_variance = 1.0;
    f.tau2 = tau2[j];
    fits.push_back(f);
  }
  return fits;
}

}  // namespace

TEST_CASE("config validation") {
  InferenceConfig cfg;
  cfg.stage2.chain_length = 10;
  cfg.stage2.burn_in = 5;
  CHECK_NOTHROW(cfg.validate());
  cfg.stage2.chain_length = 0;
  cfg.stage2.burn_in = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.stage2.chain_length = 10;
  cfg.sources = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.sources = 1;
  cfg.stage2.thin = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("stage 1 recovers an OU length-scale") {
  const MultiSeriesDataset data = simulate_ou(0.5, 1.0, 0.01, 500, 0.1, 2024);
  const auto fits = fit_lengthscales(data, Smoothness::Half);
  REQUIRE(fits.size() == 1);
  CHECK(fits[0].ell >= 0.35);
  CHECK(fits[0].ell <= 0.7);
  CHECK(fits[0].marginal_variance == doctest::Approx(1.0).epsilon(0.5));
  CHECK_FALSE(fits[0].weakly_identified);
}

TEST_CASE("stage 1 flags white-dominated data") {
  const MultiSeriesDataset data = simulate_ou(0.5, 0.01, 4.0, 300, 0.1, 5);
  const auto fits = fit_lengthscales(data, Smoothness::Half);
  CHECK(std::isfinite(fits[0].ell));
  CHECK(std::isfinite(fits[0].tau2));
  CHECK(fits[0].weakly_identified);
  CHECK_FALSE(fits[0].warning.empty());
}

TEST_CASE("stage 1 is per series") {
  const MultiSeriesDataset one = simulate_ou(1.0, 2.0, 0.05, 200, 0.2, 8);
  Matrix values(200, 2);
  values.col(0) = one.values.col(0);
  values.col(1) = one.values.col(0);
  const MultiSeriesDataset twice(one.times, values, Mask::Constant(200, 2, true));
  const auto fits = fit_lengthscales(twice, Smoothness::Half);
  CHECK(fits[0].ell == fits[1].ell);
  CHECK(fits[0].tau2 == fits[1].tau2);
  CHECK(fits[0].marginal_variance == fits[1].marginal_variance);
}

TEST_CASE("stage 1 scale consistency") {
  const MultiSeriesDataset data = simulate_ou(0.8, 1.0, 0.02, 400, 0.1, 31);
  MultiSeriesDataset scaled = data;
  scaled.values *= 3.0;
  const auto a = fit_lengthscales(data, Smoothness::Half);
  const auto b = fit_lengthscales(scaled, Smoothness::Half);
  CHECK(b[0].marginal_variance == doctest::Approx(9.0 * a[0].marginal_variance).epsilon(0.2));
  CHECK(b[0].ell == doctest::Approx(a[0].ell).epsilon(0.2));
}

TEST_CASE("stage 1 rejects short series") {
  const MultiSeriesDataset data = simulate_ou(1.0, 1.0, 0.1, 4, 1.0, 1);
  try {
    fit_lengthscales(data, Smoothness::Half);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewObservations);
  }
}

TEST_CASE("zero-length chain") {
  const MultiSeriesDataset data = simulate_ou(1.0, 1.0, 0.1, 20, 0.5, 3);
  const auto fits = fits_with({1.0}, {0.1});
  Stage2Options opts;
  const PosteriorSamples s = mh_sample(data, fits, Smoothness::Half, 1, opts);
  CHECK(s.loadings.empty());
  CHECK(s.tau2.empty());
  CHECK_FALSE(s.acceptance_rate.has_value());
  try {
    summarize(s);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyChain);
  }
}

TEST_CASE("chains are deterministic given the seed") {
  const MultiSeriesDataset data = simulate_correlated(0.5, 60, 4);
  const auto fits = fits_with({1.0, 1.5}, {0.01, 0.01});
  Stage2Options opts;
  opts.chain_length = 200;
  opts.burn_in = 50;
  opts.seed = 77;
  const PosteriorSamples a = mh_sample(data, fits, Smoothness::Half, 2, opts);
  const PosteriorSamples b = mh_sample(data, fits, Smoothness::Half, 2, opts);
  REQUIRE(a.loadings.size() == 150);
  for (std::size_t k = 0; k < a.loadings.size(); ++k) {
    CHECK(a.loadings[k] == b.loadings[k]);
    CHECK(a.tau2[k] == b.tau2[k]);
  }
  opts.seed = 78;
  const PosteriorSamples c = mh_sample(data, fits, Smoothness::Half, 2, opts);
  CHECK(c.loadings.back() != a.loadings.back());
  opts.thin = 10;
  opts.seed = 77;
  CHECK(mh_sample(data, fits, Smoothness::Half, 2, opts).loadings.size() == 15);
}

TEST_CASE("log posterior depends on L only through C") {
  std::mt19937_64 rng(137);
  const MultiSeriesDataset data = simulate_correlated(0.6, 50, 9);
  const std::vector<MaternHyper> h{MaternHyper(Smoothness::Half, 1.0), MaternHyper(Smoothness::Half, 1.5)};
  const CouplingPosterior post(data, h, 2);
  const Matrix l = support::gaussian_matrix(rng, 2, 2);
  const Eigen::HouseholderQR<Matrix> qr(support::gaussian_matrix(rng, 2, 2));
  const Matrix o = qr.householderQ();
  const Vector log_tau2 = Vector::Constant(2, std::log(0.05));
  const double a = post.log_density({l, log_tau2});
  const double b = post.log_density({l * o, log_tau2});
  CHECK(std::abs(a - b) < 1e-10 * (1 + std::abs(a)));
}

TEST_CASE("initial state reproduces the empirical correlation") {
  const MultiSeriesDataset data = simulate_correlated(0.8, 200, 12);
  const std::vector<MaternHyper> h{MaternHyper(Smoothness::Half, 1.0), MaternHyper(Smoothness::Half, 1.5)};
  const CouplingPosterior post(data, h, 2);
  const ChainState s = post.initial_state(Vector::Constant(2, 0.01));
  CHECK(s.loading.rows() == 2);
  CHECK(s.loading.cols() == 2);
  CHECK(std::isfinite(post.log_density(s)));
  const CouplingPosterior rank1(data, h, 1);
  CHECK(rank1.initial_state(Vector::Constant(2, 0.01)).loading.cols() == 1);
}

TEST_CASE("summaries of degenerate chains") {
  PosteriorSamples s;
  Matrix l(2, 2);
  l << 1.0, 0.0, 0.6, 0.8;
  for (int k = 0; k < 10; ++k) {
    s.loadings.push_back(l);
    s.tau2.push_back(Vector::Constant(2, 0.1));
  }
  s.acceptance_rate = 0.0;
  const PosteriorSummary a = summarize(s);
  CHECK(a.mean_rho(0, 1) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(a.rho_lower(0, 1) == a.rho_upper(0, 1));
  CHECK(a.rho_lower(0, 1) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(a.draws == 10);

  PosteriorSamples d;
  for (int k = 0; k < 5; ++k) {
    d.loadings.push_back(Vector::Constant(3, 1.0 + k).asDiagonal().toDenseMatrix());
    d.tau2.push_back(Vector::Constant(3, 0.1));
  }
  CHECK(summarize(d).mean_rho.isApprox(Matrix::Identity(3, 3)));
}

TEST_CASE("MH agrees with a grid posterior") {
  // p = 1, R = 1: the posterior over (L, log tau2) is two-dimensional.
  const MultiSeriesDataset data = simulate_ou(1.0, 1.0, 0.2, 25, 0.5, 314);
  const std::vector<MaternHyper> h{MaternHyper(Smoothness::Half, 1.0)};
  const CouplingPosterior post(data, h, 1);

  const int nl = 200, nt = 240;
  double z = 0.0, mean_c = 0.0, mean_lt = 0.0, max_lp = -1e300;
  std::vector<double> lp(static_cast<std::size_t>(nl * nt));
  for (int a = 0; a < nl; ++a)
    for (int b = 0; b < nt; ++b) {
      const double lv = -4.0 + 8.0 * (a + 0.5) / nl;
      const double lt = -13.0 + 16.0 * (b + 0.5) / nt;
      lp[static_cast<std::size_t>(a * nt + b)] =
          post.log_density({Matrix::Constant(1, 1, lv), Vector::Constant(1, lt)});
      max_lp = std::max(max_lp, lp[static_cast<std::size_t>(a * nt + b)]);
    }
  for (int a = 0; a < nl; ++a)
    for (int b = 0; b < nt; ++b) {
      const double lv = -4.0 + 8.0 * (a + 0.5) / nl;
      const double lt = -13.0 + 16.0 * (b + 0.5) / nt;
      const double w = std::exp(lp[static_cast<std::size_t>(a * nt + b)] - max_lp);
      z += w;
      mean_c += w * lv * lv;
      mean_lt += w * lt;
    }
  mean_c /= z;
  mean_lt /= z;

  Stage2Options opts;
  opts.chain_length = 42000;
  opts.burn_in = 2000;
  opts.seed = 2718;
  const auto fits = fits_with({1.0}, {0.2});
  const PosteriorSamples s = mh_sample(data, fits, Smoothness::Half, 1, opts);
  std::vector<double> c, lt;
  for (std::size_t k = 0; k < s.loadings.size(); ++k) {
    c.push_back(s.loadings[k](0, 0) * s.loadings[k](0, 0));
    lt.push_back(std::log(s.tau2[k](0)));
  }
  // batch-means standard error
  auto check_mean = [](const std::vector<double>& x, double target) {
    const std::size_t batches = 40;
    const std::size_t len = x.size() / batches;
    std::vector<double> means;
    for (std::size_t b = 0; b < batches; ++b) {
      double acc = 0.0;
      for (std::size_t k = 0; k < len; ++k) acc += x[b * len + k];
      means.push_back(acc / static_cast<double>(len));
    }
    double m = 0.0;
    for (double v : means) m += v;
    m /= batches;
    double var = 0.0;
    for (double v : means) var += (v - m) * (v - m);
    const double se = std::sqrt(var / (batches - 1) / batches);
    CHECK(std::abs(m - target) < 3.0 * se);
  };
  check_mean(c, mean_c);
  check_mean(lt, mean_lt);
}

TEST_CASE("p=1 posterior concentrates near the stage-1 fit") {
  const MultiSeriesDataset data = simulate_ou(0.5, 1.0, 0.01, 500, 0.1, 2024);
  const auto fits = fit_lengthscales(data, Smoothness::Half);
  Stage2Options opts;
  opts.chain_length = 3000;
  opts.burn_in = 1000;
  opts.seed = 11;
  const PosteriorSummary s = summarize(mh_sample(data, fits, Smoothness::Half, 1, opts));
  CHECK(s.mean_c(0, 0) == doctest::Approx(fits[0].marginal_variance).epsilon(0.2));
  CHECK(s.mean_tau2(0) == doctest::Approx(fits[0].tau2).epsilon(0.2));
  CHECK(s.acceptance_rate.has_value());
}

TEST_CASE("correlation recovery") {
  const MultiSeriesDataset data = simulate_correlated(0.8, 400, 1);
  const auto fits = fit_lengthscales(data, Smoothness::Half);
  Stage2Options opts;
  opts.chain_length = 3000;
  opts.burn_in = 1000;
  opts.seed = 1;
  const PosteriorSummary s = summarize(mh_sample(data, fits, Smoothness::Half, 2, opts));
  CHECK(s.mean_rho(0, 1) >= 0.6);
  CHECK(s.mean_rho(0, 1) <= 0.95);
  CHECK(s.rho_lower(0, 1) <= s.mean_rho(0, 1));
  CHECK(s.rho_upper(0, 1) >= s.mean_rho(0, 1));
}

TEST_CASE("predictive parameters") {
  PosteriorSummary s;
  s.draws = 1;
  s.mean_c = (Matrix(2, 2) << 1.0, 0.3, 0.3, 2.0).finished();
  s.mean_tau2 = Vector::Constant(2, 0.1);
  s.last_loading = (Matrix(2, 1) << 1.0, 0.5).finished();
  s.last_tau2 = Vector::Constant(2, 0.2);
  const auto fits = fits_with({1.0, 2.0}, {0.3, 0.3});
  const auto mean = predictive_parameters(fits, s, Smoothness::Half, false);
  CHECK(support::max_abs(mean.coupling.covariance() - s.mean_c) < 1e-12);
  CHECK(mean.tau2 == s.mean_tau2);
  CHECK(mean.hypers[1].ell == 2.0);
  const auto last = predictive_parameters(fits, s, Smoothness::Half, true);
  CHECK(last.coupling.loading() == s.last_loading);
  CHECK(last.tau2 == s.last_tau2);
}
