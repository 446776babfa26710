#include <doctest.h>

#include <cmath>

#include "dmp/error.hpp"
#include "dmp/numerics.hpp"
#include "support.hpp"

using namespace dmp;

TEST_CASE("cholesky of identity and a 2x2") {
  CHECK(cholesky(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));
  Matrix a(2, 2);
  a << 4, 2, 2, 5;
  Matrix expected(2, 2);
  expected << 2, 0, 1, 2;
  CHECK(support::max_abs(cholesky(a) - expected) < 1e-14);
}

TEST_CASE("cholesky reconstructs random SPD matrices") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix a = support::random_spd(rng, 6);
    const Matrix l = cholesky(a);
    CHECK(support::max_abs(l.triangularView<Eigen::StrictlyUpper>().toDenseMatrix()) == 0.0);
    const double bound = 1e-10 * (1.0 + a.lpNorm<Eigen::Infinity>());
    CHECK((l * l.transpose() - a).lpNorm<Eigen::Infinity>() < bound);
  }
}

TEST_CASE("cholesky jitter policy") {
  // Rank-deficient PSD: plain factorization fails, one jitter retry succeeds.
  Matrix a(2, 2);
  a << 1, 1, 1, 1;
  const CholeskyFactor f(a);
  CHECK(f.jittered());
  CHECK(support::max_abs(f.lower() * f.lower().transpose() - a) < 1e-8);

  Matrix indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(CholeskyFactor{indefinite}, Error);
  try {
    CholeskyFactor{indefinite};
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
  }

  Matrix asym(2, 2);
  asym << 2, 1, 0, 2;
  try {
    CholeskyFactor{asym};
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidArgument);
  }
}

TEST_CASE("cholesky solves and log determinant") {
  std::mt19937_64 rng(5);
  const Matrix a = support::random_spd(rng, 5);
  const CholeskyFactor f(a);
  const Vector b = support::gaussian_matrix(rng, 5, 1).col(0);
  CHECK(support::max_abs(a * f.solve(b) - b) < 1e-10);
  CHECK(std::abs(f.log_determinant() - std::log(a.determinant())) < 1e-10);
  CHECK(support::max_abs(f.lower() * f.whiten(b) - b) < 1e-12);
}

TEST_CASE("matrix exponential at zero is identity") {
  std::mt19937_64 rng(3);
  const Matrix q = support::random_stable(rng, 4);
  CHECK(matrix_exponential(q, 0.0) == Matrix::Identity(4, 4));
}

TEST_CASE("matrix exponential of the nu=3/2 drift") {
  const double s3 = std::sqrt(3.0);
  Matrix q(2, 2);
  q << 0, 1, -3, -2 * s3;
  Matrix expected(2, 2);
  expected << 1 + s3, 1, -3, 1 - s3;
  expected *= std::exp(-s3);
  const Matrix e = matrix_exponential(q, 1.0);
  CHECK(support::max_abs(e - expected) < 1e-13);
  // rounded reference values, good to about 2e-4 relative
  CHECK(e(0, 0) == doctest::Approx(0.48329).epsilon(2e-4));
  CHECK(e(0, 1) == doctest::Approx(0.17690).epsilon(2e-4));
  CHECK(e(1, 0) == doctest::Approx(-0.53071).epsilon(2e-4));
  CHECK(e(1, 1) == doctest::Approx(-0.12950).epsilon(2e-4));
}

TEST_CASE("matrix exponential matches the power series") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix q = support::random_stable(rng, 3);
    CHECK(support::max_abs(matrix_exponential(q, 0.7) - support::expm_series(q * 0.7)) < 1e-9);
  }
  const Matrix big = support::random_stable(rng, 6) * 8.0;
  const Matrix ref = support::expm_series(big * 0.3);
  CHECK(support::max_abs(matrix_exponential(big, 0.3) - ref) < 1e-9 * (1.0 + support::max_abs(ref)));
}

TEST_CASE("matrix exponential semigroup and decay") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix q = support::random_stable(rng, 4);
    const double s = support::uniform(rng, 0.0, 2.0);
    const double t = support::uniform(rng, 0.0, 2.0);
    CHECK(support::max_abs(matrix_exponential(q, s + t) -
                           matrix_exponential(q, s) * matrix_exponential(q, t)) < 1e-9);
    const double n10 = matrix_exponential(q, 10.0).operatorNorm();
    const double n20 = matrix_exponential(q, 20.0).operatorNorm();
    CHECK(n20 < n10);
    CHECK(n10 < 1.0);
  }
}

TEST_CASE("lyapunov scalar and nu=3/2 cases") {
  const double ell = 1.7;
  Matrix q(1, 1), d(1, 1);
  q << -1.0 / ell;
  d << 2.0 / ell;
  CHECK(solve_lyapunov(q, d)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  const double l2 = 2.0;
  const double lambda = std::sqrt(3.0) / l2;
  Matrix q2(2, 2);
  q2 << 0, 1, -lambda * lambda, -2 * lambda;
  Matrix d2 = Matrix::Zero(2, 2);
  d2(1, 1) = std::pow(2 * lambda, 3);
  const Matrix s = solve_lyapunov(q2, d2);
  Matrix expected(2, 2);
  expected << 2, 0, 0, 6.0 / 4.0;
  CHECK(support::max_abs(s - expected) < 1e-12);
  CHECK(support::max_abs(q2 * s + s * q2.transpose() + d2) < 1e-12);
}

TEST_CASE("lyapunov matches the Kronecker oracle and is PSD") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix q = support::random_stable(rng, 4);
    const Matrix d = support::random_spd(rng, 4);
    const Matrix s = solve_lyapunov(q, d);
    CHECK(support::max_abs(s - support::lyapunov_kron(q, d)) < 1e-9);
    CHECK(support::max_abs(s - s.transpose()) < 1e-12);
    CHECK(min_symmetric_eigenvalue(s) >= -1e-10);
  }
}

TEST_CASE("lyapunov rejects unstable drift") {
  Matrix q(1, 1), d(1, 1);
  q << 0.5;
  d << 1.0;
  try {
    solve_lyapunov(q, d);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnstableSystem);
    CHECK(e.category() == ErrorCategory::Numeric);
  }
}

TEST_CASE("sylvester solve") {
  std::mt19937_64 rng(31);
  const Matrix a = support::random_stable(rng, 3);
  const Matrix b = support::random_stable(rng, 2);
  const Matrix d = support::gaussian_matrix(rng, 3, 2);
  const Matrix x = solve_sylvester(a, b, d);
  CHECK(support::max_abs(a * x + x * b.transpose() + d) < 1e-12);
}

TEST_CASE("mvn log density") {
  CHECK(mvn_logpdf(Vector::Zero(1), Vector::Zero(1), Matrix::Identity(1, 1)) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  Vector x(1);
  x << 1.0;
  Matrix cov(1, 1);
  cov << 2.0;
  const double expected = -0.5 * (std::log(4.0 * M_PI) + 0.5);
  CHECK(mvn_logpdf(x, Vector::Zero(1), cov) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(-1.51551).epsilon(1e-5));

  std::mt19937_64 rng(37);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix s = support::random_spd(rng, 5);
    const Vector m = support::gaussian_matrix(rng, 5, 1).col(0);
    const Vector y = support::gaussian_matrix(rng, 5, 1).col(0);
    const Vector r = y - m;
    const double naive = -0.5 * (5 * std::log(2 * M_PI) + std::log(s.determinant()) +
                                 r.dot(s.inverse() * r));
    CHECK(std::abs(mvn_logpdf(y, m, s) - naive) < 1e-10);
  }
}

TEST_CASE("sampling factor handles rank deficiency") {
  Matrix a(3, 3);
  a << 1, 1, 0, 1, 1, 0, 0, 0, 0;
  const Matrix f = sampling_factor(a);
  CHECK(support::max_abs(f * f.transpose() - a) < 1e-10);
  std::mt19937_64 rng(41);
  const Matrix s = support::random_spd(rng, 4);
  const Matrix g = sampling_factor(s);
  CHECK(support::max_abs(g * g.transpose() - s) < 1e-10);
}
