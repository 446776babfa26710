#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dmp/numerics.hpp"

namespace dmp {

/// Half-integer Matern smoothness nu = n + 1/2.
enum class Smoothness { Half = 0, ThreeHalves = 1, FiveHalves = 2 };

/// Throws UnsupportedSmoothness unless nu is 0.5, 1.5 or 2.5.
Smoothness smoothness_from_nu(double nu);
double nu_value(Smoothness nu) noexcept;
/// Number of derivatives carried in the state, n = nu - 1/2.
int derivative_order(Smoothness nu) noexcept;

struct MaternHyper {
  Smoothness nu = Smoothness::Half;
  double ell = 1.0;  // length-scale, time units

  MaternHyper() = default;
  MaternHyper(Smoothness nu_, double ell_);

  int order() const noexcept { return derivative_order(nu); }
  /// Decay rate sqrt(2 nu) / ell, the repeated root of the SDE operator.
  double rate() const noexcept;
};

/// p x R loading matrix L of the shared input noise; C = L L^T.
class CouplingMatrix {
 public:
  CouplingMatrix() = default;
  /// Rejects R > p, empty or non-finite loadings.
  explicit CouplingMatrix(Matrix loading);

  /// A loading L with L L^T = C, from the eigendecomposition of C truncated to
  /// the `rank` leading components (rank 0 keeps all).
  static CouplingMatrix from_covariance(const Matrix& c, Eigen::Index rank = 0);

  const Matrix& loading() const noexcept { return loading_; }
  Eigen::Index series() const noexcept { return loading_.rows(); }
  Eigen::Index sources() const noexcept { return loading_.cols(); }
  Matrix covariance() const { return loading_ * loading_.transpose(); }
  Matrix correlation() const;

 private:
  Matrix loading_;
};

double matern_univariate(double dt, const MaternHyper& hyper, double variance);

/// Ratio of geometric to arithmetic mean, 2 sqrt(l_i l_j) / (l_i + l_j).
double length_scale_ratio(double ell_i, double ell_j);

/// E x_i(s) x_j(t) of the dependent Matern process.
///
/// For s <= t and Delta = t - s:
///   nu = 1/2:  c_ij r_ij e^{-Delta / l_j}
///   nu = 3/2:  c_ij r_ij^3 (2 + Delta (sqrt3/l_i + sqrt3/l_j)) e^{-sqrt3 Delta / l_j}
///   nu = 5/2:  position/position entry of B_ij e^{Delta Q_j^T}
/// The s > t case uses kappa([i,s],[j,t]) = kappa([j,t],[i,s]).
double cross_covariance(double s, double t, std::size_t i, std::size_t j,
                        std::span<const MaternHyper> hypers,
                        const CouplingMatrix& coupling);

/// Same as above with the noise covariance C supplied directly.
double cross_covariance(double s, double t, std::size_t i, std::size_t j,
                        std::span<const MaternHyper> hypers, const Matrix& c);

/// diag(C)^{-1/2} C diag(C)^{-1/2}; throws DegenerateSeries on c_ii <= 0.
Matrix correlation_from_C(const Matrix& c);

/// Throws MixedSmoothness if the hypers disagree on nu, InvalidArgument if empty.
Smoothness shared_smoothness(std::span<const MaternHyper> hypers);

}  // namespace dmp
