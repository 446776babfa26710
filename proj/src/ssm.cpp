#include "dmp/ssm.hpp"

#include <cmath>
#include <utility>

#include "dmp/error.hpp"

namespace dmp {

double diffusion_constant(Smoothness nu, double ell) {
  const MaternHyper hyper(nu, ell);
  return std::pow(2.0 * hyper.rate(), 2 * hyper.order() + 1);
}

double unit_position_variance(Smoothness nu) noexcept {
  switch (nu) {
    case Smoothness::Half: return 1.0;
    case Smoothness::ThreeHalves: return 2.0;
    case Smoothness::FiveHalves: return 6.0;
  }
  return 1.0;
}

Matrix companion_matrix(const MaternHyper& hyper) {
  const int n = hyper.order();
  const double lambda = hyper.rate();
  const Eigen::Index dim = n + 1;
  Matrix q = Matrix::Zero(dim, dim);
  for (Eigen::Index k = 0; k + 1 < dim; ++k) q(k, k + 1) = 1.0;
  // (x + lambda)^{n+1} = sum_k binom(n+1, k) lambda^{n+1-k} x^k
  double binom = 1.0;
  for (int k = 0; k <= n; ++k) {
    q(n, k) = -binom * std::pow(lambda, n + 1 - k);
    binom = binom * (n + 1 - k) / (k + 1);
  }
  return q;
}

Matrix transition_block(const MaternHyper& hyper, double dt) {
  if (!(dt >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "transition_block: dt must be >= 0");
  }
  const int n = hyper.order();
  const double lambda = hyper.rate();
  if (n == 0) return Matrix::Constant(1, 1, std::exp(-lambda * dt));
  const Eigen::Index dim = n + 1;
  Matrix nil = companion_matrix(hyper);
  nil.diagonal().array() += lambda;
  Matrix sum = Matrix::Identity(dim, dim);
  Matrix term = Matrix::Identity(dim, dim);
  for (int k = 1; k <= n; ++k) {
    term = (term * nil) * (dt / k);
    sum += term;
  }
  return std::exp(-lambda * dt) * sum;
}

UnivariateSSM build_univariate(const MaternHyper& hyper) {
  UnivariateSSM ssm;
  ssm.drift = companion_matrix(hyper);
  const Eigen::Index dim = ssm.drift.rows();
  ssm.observation = Vector::Zero(dim);
  ssm.observation(0) = 1.0;
  ssm.diffusion = diffusion_constant(hyper.nu, hyper.ell);
  Matrix d = Matrix::Zero(dim, dim);
  d(dim - 1, dim - 1) = ssm.diffusion;
  ssm.stationary_cov = solve_lyapunov(ssm.drift, d);
  return ssm;
}

Matrix stationary_cross_block(const MaternHyper& hi, const MaternHyper& hj) {
  if (hi.nu != hj.nu) {
    throw Error(ErrorKind::MixedSmoothness, "stationary_cross_block: smoothness differs");
  }
  const double r = length_scale_ratio(hi.ell, hj.ell);
  switch (hi.nu) {
    case Smoothness::Half:
      return Matrix::Constant(1, 1, r);
    case Smoothness::ThreeHalves: {
      const double ai = hi.rate();
      const double aj = hj.rate();
      Matrix b(2, 2);
      b << 2.0, ai - aj, aj - ai, 2.0 * ai * aj;
      return r * r * r * b;
    }
    case Smoothness::FiveHalves:
      return stationary_cross_block_lyapunov(hi, hj);
  }
  throw Error(ErrorKind::UnsupportedSmoothness, "stationary_cross_block");
}

Matrix stationary_cross_block_lyapunov(const MaternHyper& hi, const MaternHyper& hj) {
  if (hi.nu != hj.nu) {
    throw Error(ErrorKind::MixedSmoothness, "stationary_cross_block: smoothness differs");
  }
  const Matrix qi = companion_matrix(hi);
  const Matrix qj = companion_matrix(hj);
  const Eigen::Index dim = qi.rows();
  Matrix d = Matrix::Zero(dim, dim);
  d(dim - 1, dim - 1) = std::sqrt(diffusion_constant(hi.nu, hi.ell) *
                                  diffusion_constant(hj.nu, hj.ell));
  return solve_sylvester(qi, qj, d);
}

namespace {

void check_shapes(std::span<const MaternHyper> hypers, const CouplingMatrix& coupling) {
  shared_smoothness(hypers);
  if (coupling.series() != static_cast<Eigen::Index>(hypers.size())) {
    throw Error(ErrorKind::InvalidArgument,
                "coupling matrix row count does not match the number of series");
  }
}

Matrix block_diagonal_drift(std::span<const MaternHyper> hypers) {
  const Eigen::Index b = hypers.front().order() + 1;
  const auto p = static_cast<Eigen::Index>(hypers.size());
  Matrix q = Matrix::Zero(p * b, p * b);
  for (Eigen::Index i = 0; i < p; ++i) {
    q.block(i * b, i * b, b, b) = companion_matrix(hypers[static_cast<std::size_t>(i)]);
  }
  return q;
}

void require_psd(const Matrix& sigma) {
  const double scale = 1.0 + sigma.cwiseAbs().maxCoeff();
  if (!sigma.allFinite() || min_symmetric_eigenvalue(sigma) < -1e-10 * scale) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "joint stationary covariance is not positive semi-definite");
  }
}

}  // namespace

Matrix joint_stationary_covariance(std::span<const MaternHyper> hypers,
                                   const CouplingMatrix& coupling) {
  return JointStateSpaceModel({hypers.begin(), hypers.end()}, coupling)
      .stationary_covariance();
}

Matrix joint_stationary_covariance_lyapunov(std::span<const MaternHyper> hypers,
                                            const CouplingMatrix& coupling) {
  check_shapes(hypers, coupling);
  const Eigen::Index b = hypers.front().order() + 1;
  const auto p = static_cast<Eigen::Index>(hypers.size());
  const Matrix c = coupling.covariance();
  Matrix d = Matrix::Zero(p * b, p * b);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& hi = hypers[static_cast<std::size_t>(i)];
      const auto& hj = hypers[static_cast<std::size_t>(j)];
      d(i * b + b - 1, j * b + b - 1) =
          c(i, j) * std::sqrt(diffusion_constant(hi.nu, hi.ell) *
                              diffusion_constant(hj.nu, hj.ell));
    }
  }
  Matrix sigma = solve_lyapunov(block_diagonal_drift(hypers), d);
  require_psd(sigma);
  return sigma;
}

JointStateSpaceModel::JointStateSpaceModel(std::vector<MaternHyper> hypers,
                                           CouplingMatrix coupling)
    : hypers_(std::move(hypers)), coupling_(std::move(coupling)) {
  check_shapes(hypers_, coupling_);
  auto blocks = std::make_shared<std::vector<Matrix>>();
  const std::size_t p = hypers_.size();
  blocks->resize(p * p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      (*blocks)[i * p + j] = stationary_cross_block(hypers_[i], hypers_[j]);
    }
  }
  unit_blocks_ = std::move(blocks);
  assemble();
}

JointStateSpaceModel::JointStateSpaceModel(
    std::vector<MaternHyper> hypers, CouplingMatrix coupling,
    std::shared_ptr<const std::vector<Matrix>> unit_blocks)
    : hypers_(std::move(hypers)),
      coupling_(std::move(coupling)),
      unit_blocks_(std::move(unit_blocks)) {
  check_shapes(hypers_, coupling_);
  assemble();
}

JointStateSpaceModel JointStateSpaceModel::with_coupling(CouplingMatrix coupling) const {
  return JointStateSpaceModel(hypers_, std::move(coupling), unit_blocks_);
}

void JointStateSpaceModel::assemble() {
  const std::size_t p = hypers_.size();
  const Eigen::Index b = block_size();
  noise_cov_ = coupling_.covariance();
  drift_ = block_diagonal_drift(hypers_);
  observation_ = Matrix::Zero(static_cast<Eigen::Index>(p), state_dim());
  sigma_inf_ = Matrix::Zero(state_dim(), state_dim());
  for (std::size_t i = 0; i < p; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    observation_(ii, position_index(i)) = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      sigma_inf_.block(ii * b, jj * b, b, b) = noise_cov_(ii, jj) * (*unit_blocks_)[i * p + j];
    }
  }
  sigma_inf_ = symmetrize(sigma_inf_);
  require_psd(sigma_inf_);
}

Matrix JointStateSpaceModel::transition(double dt) const {
  const Eigen::Index b = block_size();
  Matrix a = Matrix::Zero(state_dim(), state_dim());
  for (std::size_t i = 0; i < series_count(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    a.block(ii * b, ii * b, b, b) = transition_block(hypers_[i], dt);
  }
  return a;
}

Discretization discretize(const JointStateSpaceModel& model, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorKind::InvalidArgument, "discretize: gap must be finite and > 0");
  }
  Discretization out;
  out.transition = model.transition(dt);
  const Matrix& sigma = model.stationary_covariance();
  out.process_noise =
      symmetrize(sigma - out.transition * sigma * out.transition.transpose());
  return out;
}

}  // namespace dmp
