#include "dmp/kernels.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dmp/error.hpp"
#include "dmp/ssm.hpp"

namespace dmp {

Smoothness smoothness_from_nu(double nu) {
  if (nu == 0.5) return Smoothness::Half;
  if (nu == 1.5) return Smoothness::ThreeHalves;
  if (nu == 2.5) return Smoothness::FiveHalves;
  throw Error(ErrorKind::UnsupportedSmoothness,
              "smoothness nu=" + std::to_string(nu) + " is not one of 0.5, 1.5, 2.5");
}

double nu_value(Smoothness nu) noexcept { return derivative_order(nu) + 0.5; }

int derivative_order(Smoothness nu) noexcept { return static_cast<int>(nu); }

MaternHyper::MaternHyper(Smoothness nu_, double ell_) : nu(nu_), ell(ell_) {
  if (!(ell > 0.0) || !std::isfinite(ell)) {
    throw Error(ErrorKind::InvalidArgument, "length-scale must be finite and positive");
  }
  if (order() < 0 || order() > 2) {
    throw Error(ErrorKind::UnsupportedSmoothness, "unsupported smoothness");
  }
}

double MaternHyper::rate() const noexcept {
  return std::sqrt(2.0 * nu_value(nu)) / ell;
}

CouplingMatrix::CouplingMatrix(Matrix loading) : loading_(std::move(loading)) {
  if (loading_.rows() == 0 || loading_.cols() == 0) {
    throw Error(ErrorKind::InvalidArgument, "coupling matrix must be non-empty");
  }
  if (loading_.cols() > loading_.rows()) {
    throw Error(ErrorKind::InvalidArgument,
                "coupling matrix has more latent sources than series (R > p)");
  }
  if (!loading_.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "coupling matrix has non-finite entries");
  }
}

CouplingMatrix CouplingMatrix::from_covariance(const Matrix& c, Eigen::Index rank) {
  if (c.rows() != c.cols() || c.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, "covariance must be square and non-empty");
  }
  const Eigen::Index p = c.rows();
  if (rank <= 0 || rank > p) rank = p;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(c));
  // eigenvalues ascend; take the trailing `rank` columns, largest first
  Matrix loading(p, rank);
  for (Eigen::Index k = 0; k < rank; ++k) {
    const Eigen::Index src = p - 1 - k;
    const double lambda = std::max(es.eigenvalues()(src), 0.0);
    loading.col(k) = es.eigenvectors().col(src) * std::sqrt(lambda);
  }
  return CouplingMatrix(std::move(loading));
}

Matrix CouplingMatrix::correlation() const { return correlation_from_C(covariance()); }

double matern_univariate(double dt, const MaternHyper& hyper, double variance) {
  if (!std::isfinite(dt)) {
    throw Error(ErrorKind::InvalidArgument, "matern_univariate: lag must be finite");
  }
  const double x = std::abs(dt) / hyper.ell;
  switch (hyper.nu) {
    case Smoothness::Half:
      return variance * std::exp(-x);
    case Smoothness::ThreeHalves: {
      const double a = std::sqrt(3.0) * x;
      return variance * (1.0 + a) * std::exp(-a);
    }
    case Smoothness::FiveHalves: {
      const double a = std::sqrt(5.0) * x;
      return variance * (1.0 + a + 5.0 * x * x / 3.0) * std::exp(-a);
    }
  }
  throw Error(ErrorKind::UnsupportedSmoothness, "matern_univariate: unsupported smoothness");
}

double length_scale_ratio(double ell_i, double ell_j) {
  if (!(ell_i > 0.0) || !(ell_j > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "length_scale_ratio: length-scales must be > 0");
  }
  return 2.0 * std::sqrt(ell_i * ell_j) / (ell_i + ell_j);
}

Smoothness shared_smoothness(std::span<const MaternHyper> hypers) {
  if (hypers.empty()) {
    throw Error(ErrorKind::InvalidArgument, "at least one series is required");
  }
  const Smoothness nu = hypers.front().nu;
  for (const auto& h : hypers) {
    if (h.nu != nu) {
      throw Error(ErrorKind::MixedSmoothness, "all series must share the same smoothness");
    }
  }
  return nu;
}

double cross_covariance(double s, double t, std::size_t i, std::size_t j,
                        std::span<const MaternHyper> hypers, const Matrix& c) {
  const Smoothness nu = shared_smoothness(hypers);
  if (i >= hypers.size() || j >= hypers.size() ||
      c.rows() != static_cast<Eigen::Index>(hypers.size()) || c.cols() != c.rows()) {
    throw Error(ErrorKind::InvalidArgument, "cross_covariance: index or shape mismatch");
  }
  if (s > t) {
    std::swap(s, t);
    std::swap(i, j);
  } else if (s == t && i > j) {
    std::swap(i, j);
  }
  const double delta = t - s;
  const double li = hypers[i].ell;
  const double lj = hypers[j].ell;
  const double cij = c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  switch (nu) {
    case Smoothness::Half:
      return cij * length_scale_ratio(li, lj) * std::exp(-delta / lj);
    case Smoothness::ThreeHalves: {
      const double r = length_scale_ratio(li, lj);
      const double s3 = std::sqrt(3.0);
      return cij * r * r * r * (2.0 + delta * (s3 / li + s3 / lj)) *
             std::exp(-s3 * delta / lj);
    }
    case Smoothness::FiveHalves: {
      const Matrix block = stationary_cross_block(hypers[i], hypers[j]);
      const Matrix transition = transition_block(hypers[j], delta);
      return cij * block.row(0).dot(transition.row(0));
    }
  }
  throw Error(ErrorKind::UnsupportedSmoothness, "cross_covariance: unsupported smoothness");
}

double cross_covariance(double s, double t, std::size_t i, std::size_t j,
                        std::span<const MaternHyper> hypers,
                        const CouplingMatrix& coupling) {
  return cross_covariance(s, t, i, j, hypers, coupling.covariance());
}

Matrix correlation_from_C(const Matrix& c) {
  if (c.rows() != c.cols() || c.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, "correlation_from_C: expected square matrix");
  }
  const Vector d = c.diagonal();
  if ((d.array() <= 0.0).any() || !d.allFinite()) {
    throw Error(ErrorKind::DegenerateSeries,
                "correlation_from_C: non-positive noise variance on the diagonal");
  }
  const Vector inv_sd = d.array().rsqrt();
  Matrix rho = inv_sd.asDiagonal() * c * inv_sd.asDiagonal();
  rho.diagonal().setOnes();
  return rho;
}

}  // namespace dmp
