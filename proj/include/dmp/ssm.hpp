#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "dmp/kernels.hpp"
#include "dmp/numerics.hpp"

namespace dmp {

/// Noise intensity C^2 on the last state component of one Matern SDE.
///
/// Chosen as (2 sqrt(2 nu) / l)^{2n+1}, which gives stationary position
/// variance 1 for nu = 1/2 and the [[2, 0], [0, 6/l^2]] stationary block for
/// nu = 3/2 (position variance 6 for nu = 5/2).
double diffusion_constant(Smoothness nu, double ell);

/// Stationary position variance of a single series with unit coupling (1, 2, 6).
double unit_position_variance(Smoothness nu) noexcept;

/// Companion matrix of (d/dt + sqrt(2 nu)/l)^{n+1}.
Matrix companion_matrix(const MaternHyper& hyper);

/// e^{dt Q} for a single Matern block in closed form. With N = Q + rate I
/// nilpotent of index n+1, e^{dt Q} = e^{-rate dt} sum_k (dt N)^k / k!.
Matrix transition_block(const MaternHyper& hyper, double dt);

struct UnivariateSSM {
  Matrix drift;            // Q, (n+1) x (n+1)
  Vector observation;      // H, selects the position
  double diffusion = 0.0;  // C^2 on the last component
  Matrix stationary_cov;   // Sigma_inf
};

UnivariateSSM build_univariate(const MaternHyper& hyper);

/// Cross block B_ij of the stationary covariance for unit coupling c_ij = 1.
/// Closed form for n <= 1, Sylvester solve for n = 2.
Matrix stationary_cross_block(const MaternHyper& hi, const MaternHyper& hj);

/// The same block, always through Q_i X + X Q_j^T + D_ij = 0.
Matrix stationary_cross_block_lyapunov(const MaternHyper& hi, const MaternHyper& hj);

/// Joint Sigma_inf with blocks c_ij B_ij (series-major state ordering).
Matrix joint_stationary_covariance(std::span<const MaternHyper> hypers,
                                   const CouplingMatrix& coupling);

/// Joint Sigma_inf from one Lyapunov solve on the full block-diagonal drift.
Matrix joint_stationary_covariance_lyapunov(std::span<const MaternHyper> hypers,
                                            const CouplingMatrix& coupling);

/// Stacked state space for p coupled Matern SDEs sharing one smoothness.
///
/// Series i occupies state indices i(n+1) .. i(n+1)+n, position first.
/// Instances are immutable; `with_coupling` reuses the unit-coupling blocks,
/// which depend on the length-scales only.
class JointStateSpaceModel {
 public:
  JointStateSpaceModel(std::vector<MaternHyper> hypers, CouplingMatrix coupling);

  JointStateSpaceModel with_coupling(CouplingMatrix coupling) const;

  std::size_t series_count() const noexcept { return hypers_.size(); }
  Smoothness smoothness() const noexcept { return hypers_.front().nu; }
  int order() const noexcept { return hypers_.front().order(); }
  Eigen::Index block_size() const noexcept { return order() + 1; }
  Eigen::Index state_dim() const noexcept {
    return static_cast<Eigen::Index>(series_count()) * block_size();
  }
  Eigen::Index position_index(std::size_t series) const noexcept {
    return static_cast<Eigen::Index>(series) * block_size();
  }

  const std::vector<MaternHyper>& hypers() const noexcept { return hypers_; }
  const CouplingMatrix& coupling() const noexcept { return coupling_; }
  const Matrix& noise_covariance() const noexcept { return noise_cov_; }
  const Matrix& drift() const noexcept { return drift_; }
  const Matrix& observation() const noexcept { return observation_; }
  const Matrix& stationary_covariance() const noexcept { return sigma_inf_; }

  /// Block-diagonal e^{dt Qbar}.
  Matrix transition(double dt) const;

 private:
  JointStateSpaceModel(std::vector<MaternHyper> hypers, CouplingMatrix coupling,
                       std::shared_ptr<const std::vector<Matrix>> unit_blocks);
  void assemble();

  std::vector<MaternHyper> hypers_;
  CouplingMatrix coupling_;
  std::shared_ptr<const std::vector<Matrix>> unit_blocks_;  // row-major p x p
  Matrix noise_cov_;
  Matrix drift_;
  Matrix observation_;
  Matrix sigma_inf_;
};

struct Discretization {
  Matrix transition;     // A = e^{dt Qbar}
  Matrix process_noise;  // Sigma_inf - A Sigma_inf A^T, symmetrized
};

Discretization discretize(const JointStateSpaceModel& model, double dt);

}  // namespace dmp
