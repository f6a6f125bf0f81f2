#include "mwg/gmrf.hpp"

#include <cmath>
#include <stdexcept>

namespace mwg {

Eigen::MatrixXd exp_cov_1d(int n, double ell) {
  if (n < 1) throw std::invalid_argument("exp_cov_1d: n must be >= 1");
  if (ell <= 0) throw std::invalid_argument("exp_cov_1d: ell must be positive");
  Eigen::MatrixXd C(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) C(i, j) = std::exp(-std::abs(i - j) / (2.0 * ell));
  return C;
}

Eigen::MatrixXd sep_exp_cov_2d(int side, double sigma_s2, double sigma_t2, double ell_s,
                               double ell_t) {
  if (side < 1) throw std::invalid_argument("sep_exp_cov_2d: side must be >= 1");
  if (sigma_s2 <= 0 || sigma_t2 <= 0 || ell_s <= 0 || ell_t <= 0)
    throw std::invalid_argument("sep_exp_cov_2d: scales must be positive");
  const int n = side * side;
  const double amp = sigma_s2 * sigma_t2;
  Eigen::MatrixXd B(n, n);
  // index = i + side*j with i moving along s and j along t
  for (int j2 = 0; j2 < side; ++j2)
    for (int i2 = 0; i2 < side; ++i2)
      for (int j1 = 0; j1 < side; ++j1)
        for (int i1 = 0; i1 < side; ++i1)
          B(i1 + side * j1, i2 + side * j2) =
              amp * std::exp(-std::abs(i1 - i2) / (2.0 * ell_s) -
                             std::abs(j1 - j2) / (2.0 * ell_t));
  return B;
}

Eigen::MatrixXd sq_exp_cov_2d(const std::vector<std::pair<double, double>>& pts, double ell_s,
                              double ell_t) {
  if (ell_s <= 0 || ell_t <= 0)
    throw std::invalid_argument("sq_exp_cov_2d: length scales must be positive");
  const int n = static_cast<int>(pts.size());
  Eigen::MatrixXd C(n, n);
  for (int a = 0; a < n; ++a) {
    C(a, a) = 1.0;
    for (int b = a + 1; b < n; ++b) {
      const double ds = pts[a].first - pts[b].first;
      const double dt = pts[a].second - pts[b].second;
      const double v = std::exp(-ds * ds / (2.0 * ell_s * ell_s) -
                                dt * dt / (2.0 * ell_t * ell_t));
      C(a, b) = v;
      C(b, a) = v;
    }
  }
  return C;
}

GaussianTarget::GaussianTarget(Eigen::VectorXd mean, Eigen::MatrixXd precision)
    : mean_(std::move(mean)), P_(std::move(precision)) {
  if (P_.rows() != P_.cols() || P_.rows() != mean_.size())
    throw std::invalid_argument("GaussianTarget: dimension mismatch");
  const double scale = std::max(P_.cwiseAbs().maxCoeff(), 1.0);
  if ((P_ - P_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("GaussianTarget: precision not symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(P_).info() != Eigen::Success)
    throw std::invalid_argument("GaussianTarget: precision not positive definite");
}

GaussianTarget GaussianTarget::from_covariance(Eigen::VectorXd mean,
                                               const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("GaussianTarget: covariance not positive definite");
  Eigen::MatrixXd P = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
  P = 0.5 * (P + P.transpose()).eval();  // symmetrize solve round-off
  return GaussianTarget(std::move(mean), std::move(P));
}

double GaussianTarget::log_density(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = x - mean_;
  return -0.5 * r.dot(P_ * r);
}

Eigen::VectorXd GaussianTarget::grad(const Eigen::VectorXd& x) const {
  return -(P_ * (x - mean_));
}

void GaussianTarget::log_density_and_grad(const Eigen::VectorXd& x, double& logp,
                                          Eigen::VectorXd& g) const {
  const Eigen::VectorXd r = x - mean_;
  const Eigen::VectorXd Pr = P_ * r;
  logp = -0.5 * r.dot(Pr);
  g = -Pr;
}

void GaussianTarget::block_update(const Eigen::VectorXd&, double logp_x,
                                  const Eigen::VectorXd& grad_x, const std::vector<int>& idx,
                                  const Eigen::VectorXd& delta, const Eigen::VectorXd&,
                                  double& logp_new, Eigen::VectorXd& grad_new) const {
  // Quadratic identity: logp(x+d) = logp(x) + g.d - 1/2 d'Pd, grad(x+d) = g - Pd,
  // with d supported on idx; costs O(n q) instead of O(n^2).
  const int q = static_cast<int>(idx.size());
  double gdot = 0.0, quad = 0.0;
  for (int a = 0; a < q; ++a) {
    gdot += grad_x[idx[a]] * delta[a];
    for (int b = 0; b < q; ++b) quad += delta[a] * P_(idx[a], idx[b]) * delta[b];
  }
  logp_new = logp_x + gdot - 0.5 * quad;
  grad_new = grad_x;
  for (int a = 0; a < q; ++a) grad_new.noalias() -= P_.col(idx[a]) * delta[a];
}

Eigen::MatrixXd GaussianTarget::covariance() const {
  Eigen::LLT<Eigen::MatrixXd> llt(P_);
  Eigen::MatrixXd C = llt.solve(Eigen::MatrixXd::Identity(P_.rows(), P_.cols()));
  return 0.5 * (C + C.transpose());
}

}  // namespace mwg
