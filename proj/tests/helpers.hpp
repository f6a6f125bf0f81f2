#pragma once

// Shared statistical helpers for the test binaries.

#include <cmath>

#include <Eigen/Dense>

#include "mwg/rng.hpp"

namespace testutil {

// Standard error of the mean of a correlated series via non-overlapping batch
// means.
inline double batch_se(const Eigen::VectorXd& series, int n_batches = 50) {
  const int n = static_cast<int>(series.size());
  const int bs = n / n_batches;
  Eigen::VectorXd means(n_batches);
  for (int b = 0; b < n_batches; ++b) means[b] = series.segment(b * bs, bs).mean();
  const double mu = means.mean();
  const double var = (means.array() - mu).square().sum() / (n_batches - 1);
  return std::sqrt(var / n_batches);
}

// Stationary AR(1) series with unit marginal variance.
inline Eigen::VectorXd ar1_series(int n, double rho, mwg::RngStream& rng) {
  Eigen::VectorXd x(n);
  x[0] = rng.normal();
  const double s = std::sqrt(1.0 - rho * rho);
  for (int i = 1; i < n; ++i) x[i] = rho * x[i - 1] + s * rng.normal();
  return x;
}

// Exact draw from N(mean, cov) via Cholesky.
inline Eigen::VectorXd gaussian_draw(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                     mwg::RngStream& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  return mean + Eigen::MatrixXd(llt.matrixL()) * rng.normals(static_cast<int>(mean.size()));
}

}  // namespace testutil
