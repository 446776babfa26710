#pragma once

#include <Eigen/Dense>

namespace dmp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Lower-triangular Cholesky factor with a single jitter retry.
///
/// The input is symmetrized first. If the plain factorization fails, the
/// diagonal is inflated once by 1e-10 * trace / dim; a second failure throws
/// NotPositiveDefinite. Inputs whose asymmetry exceeds 1e-10 (relative) are
/// rejected as InvalidArgument.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const Matrix& a);

  const Matrix& lower() const noexcept { return lower_; }
  Eigen::Index dim() const noexcept { return lower_.rows(); }
  bool jittered() const noexcept { return jittered_; }

  Matrix solve(const Matrix& b) const;
  Vector solve(const Vector& b) const;
  /// L^{-1} b
  Vector whiten(const Vector& b) const;
  double log_determinant() const;

 private:
  Matrix lower_;
  bool jittered_ = false;
};

Matrix cholesky(const Matrix& a);

/// e^{tQ} by scaling-and-squaring with a diagonal [6/6] Pade approximant.
Matrix matrix_exponential(const Matrix& q, double t);

/// Solves A X + X B^T + D = 0 through the vectorized Kronecker system.
Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& d);

/// Stationary covariance of dF = QF dt + noise with intensity D:
/// Q S + S Q^T + D = 0. Throws UnstableSystem if Q is not Hurwitz or the
/// residual exceeds 1e-10 * ||D||.
Matrix solve_lyapunov(const Matrix& q, const Matrix& d);

double mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov);

Matrix symmetrize(const Matrix& a);
double min_symmetric_eigenvalue(const Matrix& a);

/// Factor F with F F^T = cov for sampling. Falls back to an eigenvalue
/// factorization (eigenvalues below 1e-12 * trace dropped) when Cholesky
/// fails on a rank-deficient matrix.
Matrix sampling_factor(const Matrix& cov);

}  // namespace dmp
