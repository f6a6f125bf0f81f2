#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mwg/target.hpp"

namespace mwg {

// Truncated eigenbasis of a covariance matrix: columns of u are orthonormal
// eigenvectors, lam the matching eigenvalues in non-increasing order.
struct KlBasis {
  Eigen::MatrixXd u;
  Eigen::VectorXd lam;
  int n_modes = 0;
};

// Keep the leading modes until `fraction` of the total variance is retained.
// Non-positive (and numerically negligible) eigenvalues are never kept.
KlBasis kl_truncate(const Eigen::MatrixXd& b, double fraction);

// Keep exactly n_modes leading modes; all retained eigenvalues must be positive.
KlBasis kl_fixed(const Eigen::MatrixXd& b, int n_modes);

// Study configurations: prior correlation lengths plus the pinned latent
// dimension used by the block experiments.
struct PdeSetup {
  double ell_s = 0.4;
  double ell_t = 0.8;
  int n_theta = 30;
};
PdeSetup pde_setup(int which);  // 1 or 2

// Dirichlet Poisson problem -div(kappa grad u) = g on the unit square,
// bilinear elements on a uniform mesh, unknowns at the 16x16 interior nodes
// (index = i + 16*j), kappa = exp(k) elementwise from nodal averages.
// Observations pick every other component of u; noise std 0.1.
class PdeModel {
 public:
  explicit PdeModel(const PdeSetup& setup);

  int side() const { return side_; }
  int n_interior() const { return side_ * side_; }
  int n_obs() const { return n_interior() / 2; }
  int n_theta() const { return kl_.n_modes; }
  const PdeSetup& setup() const { return setup_; }
  const Eigen::MatrixXd& prior_cov() const { return prior_cov_; }
  // factor F with F F^T = B (eigenvalue square root), for field simulation
  const Eigen::MatrixXd& prior_sqrt() const { return prior_sqrt_; }
  const KlBasis& kl() const { return kl_; }
  const Eigen::VectorXd& load() const { return load_; }
  const std::vector<int>& obs_indices() const { return obs_idx_; }
  Eigen::MatrixXd obs_matrix() const;

  double noise_var() const { return noise_var_; }
  void set_noise_var(double v);

  void set_observations(const Eigen::VectorXd& y);
  bool has_observations() const { return has_obs_; }
  const Eigen::VectorXd& observations() const;

  // change of variables k = U L^{1/2} theta, theta = L^{-1/2} U^T k
  Eigen::VectorXd theta_to_k(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd k_to_theta(const Eigen::VectorXd& k) const;

  Eigen::MatrixXd assemble(const Eigen::VectorXd& k) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& k) const;
  Eigen::VectorXd observe(const Eigen::VectorXd& u) const;

  // -1/2 ||theta||^2 - 1/2 ||R^{-1/2}(H u(exp(k(theta))) - y)||^2
  double log_posterior_theta(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd grad_log_posterior_theta(const Eigen::VectorXd& theta) const;
  void log_posterior_and_grad_theta(const Eigen::VectorXd& theta, double& logp,
                                    Eigen::VectorXd& grad) const;
  // misfit term alone, for samplers that treat the prior as reference measure
  double log_likelihood_theta(const Eigen::VectorXd& theta) const;

 private:
  Eigen::VectorXd grad_k_misfit(const Eigen::VectorXd& k, const Eigen::MatrixXd& a,
                                const Eigen::LLT<Eigen::MatrixXd>& llt,
                                const Eigen::VectorXd& u) const;

  int side_ = 16;
  PdeSetup setup_;
  double noise_var_ = 0.01;
  Eigen::MatrixXd prior_cov_, prior_sqrt_;
  KlBasis kl_;
  Eigen::VectorXd load_;
  std::vector<int> obs_idx_;
  Eigen::VectorXd y_;
  bool has_obs_ = false;

  // per element: interior corners as (local corner, interior index)
  struct Element {
    int corners[4];  // interior index or -1
    int n_interior = 0;
  };
  std::vector<Element> elements_;
};

struct PdeDataset {
  Eigen::VectorXd k_true;
  Eigen::VectorXd y;
  std::uint64_t seed = 0;
};

// k_true ~ N(0, B) through the symmetric square root (256 normals), then
// y = H u(exp(k_true)) + noise_std * (128 normals).
PdeDataset simulate_pde_data(const PdeModel& model, std::uint64_t seed);

// theta-space posterior as a sampler target (dense dependence, no fast
// block update; every evaluation assembles and factors once).
class PdeTarget : public TargetDensity {
 public:
  explicit PdeTarget(const PdeModel& model);

  int dim() const override { return model_.n_theta(); }
  double log_density(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const override;
  void log_density_and_grad(const Eigen::VectorXd& x, double& logp,
                            Eigen::VectorXd& g) const override;

 private:
  const PdeModel& model_;
};

}  // namespace mwg
