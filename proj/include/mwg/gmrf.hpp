#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mwg/target.hpp"

namespace mwg {

// Exponential kernel on the 1-spaced grid {0,...,n-1}:
// C[i][j] = exp(-|i-j| / (2*ell)).
Eigen::MatrixXd exp_cov_1d(int n, double ell);

// Separable exponential kernel on a side x side grid with unit spacing,
// column-stacked as index = i + side*j (i the s-row):
// B = sigma_s2 * sigma_t2 * (C_s (x) C_t) under that stacking.
Eigen::MatrixXd sep_exp_cov_2d(int side, double sigma_s2, double sigma_t2, double ell_s,
                               double ell_t);

// Squared-exponential kernel over arbitrary (s, t) points:
// k = exp(-(ds)^2/(2*ell_s^2) - (dt)^2/(2*ell_t^2)). Unit diagonal; may be
// indefinite at round-off level (tiny negative eigenvalues are the caller's
// concern, e.g. clipped during KL truncation).
Eigen::MatrixXd sq_exp_cov_2d(const std::vector<std::pair<double, double>>& pts, double ell_s,
                              double ell_t);

// Gaussian with stored precision: log_density = -1/2 (x-mean)^T P (x-mean),
// grad = -P (x-mean). Supports the cached block update all samplers use.
class GaussianTarget : public TargetDensity {
 public:
  GaussianTarget(Eigen::VectorXd mean, Eigen::MatrixXd precision);

  static GaussianTarget from_covariance(Eigen::VectorXd mean, const Eigen::MatrixXd& cov);

  int dim() const override { return static_cast<int>(mean_.size()); }
  double log_density(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const override;
  void log_density_and_grad(const Eigen::VectorXd& x, double& logp,
                            Eigen::VectorXd& g) const override;

  bool has_block_update() const override { return true; }
  void block_update(const Eigen::VectorXd& x, double logp_x, const Eigen::VectorXd& grad_x,
                    const std::vector<int>& idx, const Eigen::VectorXd& delta,
                    const Eigen::VectorXd& x_new, double& logp_new,
                    Eigen::VectorXd& grad_new) const override;

  const Eigen::MatrixXd& precision() const { return P_; }
  Eigen::MatrixXd covariance() const;  // P^{-1}, computed on demand
  const Eigen::VectorXd& mean() const { return mean_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd P_;
};

}  // namespace mwg
