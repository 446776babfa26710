#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dmp/dataset.hpp"
#include "dmp/kernels.hpp"
#include "dmp/numerics.hpp"

namespace support {

using dmp::Matrix;
using dmp::Vector;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

inline Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n01(rng);
  return m;
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix m = gaussian_matrix(rng, n, n);
  return m * m.transpose() + Matrix::Identity(n, n);
}

// Random Hurwitz matrix with spectral abscissa at most -0.2.
inline Matrix random_stable(std::mt19937_64& rng, Eigen::Index n) {
  Matrix m = gaussian_matrix(rng, n, n);
  const double abscissa = Eigen::EigenSolver<Matrix>(m).eigenvalues().real().maxCoeff();
  m -= (abscissa + uniform(rng, 0.2, 1.0)) * Matrix::Identity(n, n);
  return m;
}

// Truncated Taylor series of e^A; A is halved until its norm is below 1/2 and
// the result squared back.
inline Matrix expm_series(const Matrix& a, int terms = 60) {
  int squarings = 0;
  Matrix scaled = a;
  while (scaled.lpNorm<Eigen::Infinity>() > 0.5) {
    scaled /= 2.0;
    ++squarings;
  }
  Matrix sum = Matrix::Identity(a.rows(), a.cols());
  Matrix term = sum;
  for (int k = 1; k <= terms; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

// Solves Q S + S Q^T + D = 0 as (I kron Q + Q kron I) vec(S) = -vec(D).
inline Matrix lyapunov_kron(const Matrix& q, const Matrix& d) {
  const Eigen::Index n = q.rows();
  Matrix k = Matrix::Zero(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      for (Eigen::Index c = 0; c < n; ++c) {
        // column-major vec: index (row, col) -> col * n + row
        k(b * n + a, b * n + c) += q(a, c);
        k(b * n + a, c * n + a) += q(b, c);
      }
    }
  }
  Vector rhs(n * n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) rhs(j * n + i) = -d(i, j);
  const Vector x = k.fullPivLu().solve(rhs);
  Matrix s(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) s(i, j) = x(j * n + i);
  return s;
}

// Independent restatement of the Matern SDE: companion drift of
// (d/dt + lambda)^{n+1} and noise intensity (2 lambda)^{2n+1}.
inline Matrix companion(int n, double ell) {
  const double lambda = std::sqrt(2.0 * n + 1.0) / ell;
  const int m = n + 1;
  Matrix q = Matrix::Zero(m, m);
  for (int k = 0; k + 1 < m; ++k) q(k, k + 1) = 1.0;
  double binom = 1.0;  // C(m, k)
  for (int k = 0; k < m; ++k) {
    q(m - 1, k) = -binom * std::pow(lambda, m - k);
    binom = binom * (m - k) / (k + 1);
  }
  return q;
}

inline double intensity(int n, double ell) {
  return std::pow(2.0 * std::sqrt(2.0 * n + 1.0) / ell, 2 * n + 1);
}

// Joint drift and noise intensity of p coupled SDEs, series-major ordering.
inline void joint_system(int n, const std::vector<double>& ells, const Matrix& c, Matrix& drift,
                         Matrix& noise) {
  const Eigen::Index p = static_cast<Eigen::Index>(ells.size());
  const Eigen::Index m = n + 1;
  drift = Matrix::Zero(p * m, p * m);
  noise = Matrix::Zero(p * m, p * m);
  for (Eigen::Index i = 0; i < p; ++i) {
    drift.block(i * m, i * m, m, m) = companion(n, ells[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < p; ++j) {
      noise(i * m + n, j * m + n) =
          c(i, j) * std::sqrt(intensity(n, ells[static_cast<std::size_t>(i)]) *
                              intensity(n, ells[static_cast<std::size_t>(j)]));
    }
  }
}

// E x_i(s) x_j(t) computed as [Sigma e^{(t-s) Qbar^T}] with Sigma from the
// Kronecker solve and the exponential from the power series.
inline double state_space_cross(int n, const std::vector<double>& ells, const Matrix& c,
                                double s, double t, Eigen::Index i, Eigen::Index j) {
  if (s > t) return state_space_cross(n, ells, c, t, s, j, i);
  Matrix drift, noise;
  joint_system(n, ells, c, drift, noise);
  const Matrix sigma = lyapunov_kron(drift, noise);
  const Matrix cov = sigma * expm_series(drift.transpose() * (t - s));
  return cov(i * (n + 1), j * (n + 1));
}

inline dmp::MultiSeriesDataset random_dataset(std::mt19937_64& rng, std::size_t n,
                                              std::size_t p, double missing_fraction,
                                              double span = 10.0) {
  std::vector<double> times(n);
  for (auto& t : times) t = uniform(rng, 0.0, span);
  std::sort(times.begin(), times.end());
  for (std::size_t k = 1; k < n; ++k) {
    if (times[k] <= times[k - 1]) times[k] = times[k - 1] + 1e-3;
  }
  Matrix values = gaussian_matrix(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  dmp::Mask observed(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::bernoulli_distribution keep(1.0 - missing_fraction);
  for (Eigen::Index k = 0; k < observed.rows(); ++k)
    for (Eigen::Index j = 0; j < observed.cols(); ++j) observed(k, j) = keep(rng);
  observed(0, 0) = true;
  return dmp::MultiSeriesDataset(std::move(times), std::move(values), std::move(observed));
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace support
