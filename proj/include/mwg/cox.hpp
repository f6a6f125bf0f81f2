#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "mwg/rng.hpp"
#include "mwg/target.hpp"

namespace mwg {

// Log-Gaussian Cox process on an L x L pixel grid: latent log-intensity field
// X ~ N(mu*1, B) with separable exponential covariance over pixel offsets,
// counts Y_k ~ Poisson(exp(X_k)).
struct CoxParams {
  double mu = 4.0;
  double sigma_s2 = 2.0;
  double sigma_t2 = 2.0;
  double ell_s = 2.0;
  double ell_t = 4.0;
};

class CoxModel {
 public:
  explicit CoxModel(int side, CoxParams params = {});

  int side() const { return side_; }
  int dim() const { return side_ * side_; }
  const CoxParams& params() const { return params_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& precision() const { return prec_; }
  // Symmetric inverse square root of the covariance, for the prior norm.
  const Eigen::MatrixXd& isqrt_covariance() const { return isqrt_; }

  void set_counts(const Eigen::VectorXd& y);
  bool has_counts() const { return has_counts_; }
  const Eigen::VectorXd& counts() const;

  // -1/2 ||B^{-1/2}(x - mu 1)||^2 + sum_k (y_k x_k - exp(x_k)), constant
  // dropped; -inf when any x_k exceeds the exp overflow guard.
  double log_posterior(const Eigen::VectorXd& x) const;
  // -B^{-1}(x - mu 1) + (y - exp(x))
  Eigen::VectorXd grad_log_posterior(const Eigen::VectorXd& x) const;

  static constexpr double overflow_threshold = 700.0;

 private:
  int side_;
  CoxParams params_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd cov_, prec_, isqrt_;
  bool has_counts_ = false;
};

struct CoxDataset {
  Eigen::VectorXd x_true;
  Eigen::VectorXd y;
  std::uint64_t seed = 0;
};

// Draws x_true = mu 1 + chol(B) xi with xi standard normal, then counts
// y_k ~ Poisson(exp(x_true_k)), all from the stream seeded with `seed`.
// Throws if any x_true_k exceeds the exp overflow guard.
CoxDataset simulate_cox(const CoxModel& model, std::uint64_t seed);

// Poisson sampler: inversion for means <= 60, normal approximation above.
long poisson_draw(double mean, RngStream& rng);

// Metric M = Lambda + B^{-1} with Lambda_kk = exp(mu + B_kk), Cholesky-factored.
Preconditioner mmala_preconditioner(const CoxModel& model);

// Kernel-side preconditioner: proposals scale the gradient and noise by the
// inverse metric, so this factors (Lambda + B^{-1})^{-1}.
Preconditioner mmala_proposal_preconditioner(const CoxModel& model);

// Posterior as a sampler target; proposals that move one pixel block update
// the cached density and gradient in O(n q) via the precision columns.
class CoxTarget : public TargetDensity {
 public:
  explicit CoxTarget(const CoxModel& model);

  int dim() const override { return model_.dim(); }
  double log_density(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const override;
  void log_density_and_grad(const Eigen::VectorXd& x, double& logp,
                            Eigen::VectorXd& g) const override;

  bool has_block_update() const override { return true; }
  void block_update(const Eigen::VectorXd& x, double logp_x, const Eigen::VectorXd& grad_x,
                    const std::vector<int>& idx, const Eigen::VectorXd& delta,
                    const Eigen::VectorXd& x_new, double& logp_new,
                    Eigen::VectorXd& grad_new) const override;

 private:
  const CoxModel& model_;
};

// Dataset CSV: header "i,j,x_true,y", one row per pixel in index order
// k = i + side*j, trailing "#seed=<seed>" comment.
void write_cox_dataset_csv(const std::string& path, const CoxDataset& d, int side);
CoxDataset read_cox_dataset_csv(const std::string& path);

}  // namespace mwg
