#pragma once

#include <Eigen/Dense>

namespace mwg {

// Biased (1/N-normalized) autocovariance estimates gamma(0..max_lag),
// FFT-based. A constant series returns all zeros.
Eigen::VectorXd autocovariance(const Eigen::VectorXd& series, int max_lag);

// Integrated autocorrelation time with Sokal's self-consistent window:
// tau_int(W) = 1 + 2*sum_{t<=W} rho(t), W the smallest lag with
// W >= 5*tau_int(W). Reported value is clamped below at 1.
struct IactEstimate {
  double iact = 1.0;
  int window = 0;
  bool truncated = false;  // no qualifying window below N/2
  Eigen::VectorXd autocov;
};

IactEstimate iact(const Eigen::VectorXd& series);

// Effective sample size n/iact.
double ess(double n_samples, double iact_value);

// Work-normalized inefficiency: iact * n_blocks * cost_per_eval.
double cost_per_effective_sample(double iact_value, int n_blocks, double cost_per_eval);

// Column-wise IACT over a chain matrix.
struct GridIact {
  Eigen::VectorXd per_coord;
  double mean = 0.0;
  double max = 0.0;
  int n_cols = 0;
};

GridIact grid_iact(const Eigen::MatrixXd& chain);

}  // namespace mwg
