#include "dmp/numerics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dmp/error.hpp"

namespace dmp {

namespace {

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument,
                std::string(what) + ": expected a non-empty square matrix");
  }
}

double inf_norm(const Matrix& a) {
  return a.rows() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

CholeskyFactor::CholeskyFactor(const Matrix& a) {
  require_square(a, "cholesky");
  if (!a.allFinite()) {
    throw Error(ErrorKind::NotPositiveDefinite, "cholesky: non-finite entries");
  }
  const double asym = inf_norm(a - a.transpose());
  if (asym > 1e-10 * (1.0 + inf_norm(a))) {
    throw Error(ErrorKind::InvalidArgument, "cholesky: matrix is not symmetric");
  }
  Matrix sym = symmetrize(a);
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * sym.trace() / static_cast<double>(sym.rows());
    if (!(jitter > 0.0)) {
      throw Error(ErrorKind::NotPositiveDefinite, "cholesky: non-positive trace");
    }
    sym.diagonal().array() += jitter;
    llt.compute(sym);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::NotPositiveDefinite,
                  "cholesky: factorization failed after jitter");
    }
    jittered_ = true;
  }
  lower_ = llt.matrixL();
}

Matrix CholeskyFactor::solve(const Matrix& b) const {
  Matrix x = lower_.triangularView<Eigen::Lower>().solve(b);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Vector CholeskyFactor::solve(const Vector& b) const {
  Vector x = lower_.triangularView<Eigen::Lower>().solve(b);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Vector CholeskyFactor::whiten(const Vector& b) const {
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

double CholeskyFactor::log_determinant() const {
  return 2.0 * lower_.diagonal().array().log().sum();
}

Matrix cholesky(const Matrix& a) { return CholeskyFactor(a).lower(); }

Matrix matrix_exponential(const Matrix& q, double t) {
  require_square(q, "matrix_exponential");
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw Error(ErrorKind::InvalidArgument,
                "matrix_exponential: time increment must be finite and >= 0");
  }
  const Eigen::Index n = q.rows();
  const Matrix identity = Matrix::Identity(n, n);
  if (t == 0.0) return identity;

  Matrix a = q * t;
  const double norm = inf_norm(a);
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    a /= std::ldexp(1.0, squarings);
  }

  constexpr int order = 6;
  double c = 0.5;
  Matrix power = a;
  Matrix numer = identity + c * a;
  Matrix denom = identity - c * a;
  for (int k = 2; k <= order; ++k) {
    c *= static_cast<double>(order - k + 1) /
         static_cast<double>(k * (2 * order - k + 1));
    power = a * power;
    numer.noalias() += c * power;
    if (k % 2 == 0) {
      denom.noalias() += c * power;
    } else {
      denom.noalias() -= c * power;
    }
  }
  Matrix e = denom.partialPivLu().solve(numer);
  for (int k = 0; k < squarings; ++k) e = e * e;
  return e;
}

Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& d) {
  require_square(a, "solve_sylvester");
  require_square(b, "solve_sylvester");
  const Eigen::Index m = a.rows();
  const Eigen::Index n = b.rows();
  if (d.rows() != m || d.cols() != n) {
    throw Error(ErrorKind::InvalidArgument, "solve_sylvester: shape mismatch");
  }
  // vec(A X) = (I_n (x) A) vec X,  vec(X B^T) = (B (x) I_m) vec X
  Matrix k = Matrix::Zero(m * n, m * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k.block(j * m, j * m, m, m) += a;
    for (Eigen::Index l = 0; l < n; ++l) {
      k.block(j * m, l * m, m, m).diagonal().array() += b(j, l);
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(d.data(), m * n);
  Eigen::PartialPivLU<Matrix> lu(k);
  Vector x = lu.solve(rhs);
  // one step of iterative refinement
  x += lu.solve(rhs - k * x);
  return Eigen::Map<const Matrix>(x.data(), m, n);
}

Matrix solve_lyapunov(const Matrix& q, const Matrix& d) {
  require_square(q, "solve_lyapunov");
  if (d.rows() != q.rows() || d.cols() != q.cols()) {
    throw Error(ErrorKind::InvalidArgument, "solve_lyapunov: shape mismatch");
  }
  const Eigen::VectorXcd eig = q.eigenvalues();
  if ((eig.real().array() >= 0.0).any()) {
    throw Error(ErrorKind::UnstableSystem,
                "solve_lyapunov: drift has an eigenvalue with non-negative real part");
  }
  Matrix sigma = symmetrize(solve_sylvester(q, q, d));
  const double residual = inf_norm(q * sigma + sigma * q.transpose() + d);
  if (!sigma.allFinite() || residual > 1e-10 * inf_norm(d)) {
    throw Error(ErrorKind::UnstableSystem,
                "solve_lyapunov: residual check failed (" + std::to_string(residual) + ")");
  }
  return sigma;
}

double mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  if (x.size() != mean.size() || cov.rows() != x.size()) {
    throw Error(ErrorKind::InvalidArgument, "mvn_logpdf: dimension mismatch");
  }
  const CholeskyFactor chol(cov);
  const Vector z = chol.whiten(x - mean);
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + chol.log_determinant() +
                 z.squaredNorm());
}

double min_symmetric_eigenvalue(const Matrix& a) {
  require_square(a, "min_symmetric_eigenvalue");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix sampling_factor(const Matrix& cov) {
  require_square(cov, "sampling_factor");
  const Matrix sym = symmetrize(cov);
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double trace = sym.trace();
  if (!(trace > 0.0)) return Matrix::Zero(cov.rows(), cov.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  Vector scale = es.eigenvalues();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    scale(i) = scale(i) < 1e-12 * trace ? 0.0 : std::sqrt(scale(i));
  }
  return es.eigenvectors() * scale.asDiagonal();
}

}  // namespace dmp
