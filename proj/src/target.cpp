#include "mwg/target.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mwg {

Eigen::VectorXd TargetDensity::block_grad(int j, const Eigen::VectorXd& x,
                                          const BlockPartition& part) const {
  const Eigen::VectorXd g = grad(x);
  const auto& blk = part.blocks.at(j);
  Eigen::VectorXd out(blk.size());
  for (std::size_t i = 0; i < blk.size(); ++i) out[i] = g[blk[i]];
  return out;
}

void TargetDensity::block_update(const Eigen::VectorXd&, double, const Eigen::VectorXd&,
                                 const std::vector<int>&, const Eigen::VectorXd&,
                                 const Eigen::VectorXd& x_new, double& logp_new,
                                 Eigen::VectorXd& grad_new) const {
  log_density_and_grad(x_new, logp_new, grad_new);
}

BoxTruncatedTarget::BoxTruncatedTarget(const TargetDensity& inner, double lo, double hi)
    : inner_(inner), lo_(lo), hi_(hi) {
  if (!(lo < hi)) throw std::invalid_argument("BoxTruncatedTarget: need lo < hi");
}

bool BoxTruncatedTarget::inside(const Eigen::VectorXd& x) const {
  return (x.array() >= lo_).all() && (x.array() <= hi_).all();
}

double BoxTruncatedTarget::log_density(const Eigen::VectorXd& x) const {
  if (!inside(x)) return -std::numeric_limits<double>::infinity();
  return inner_.log_density(x);
}

void BoxTruncatedTarget::log_density_and_grad(const Eigen::VectorXd& x, double& logp,
                                              Eigen::VectorXd& g) const {
  if (!inside(x)) {
    logp = -std::numeric_limits<double>::infinity();
    g = Eigen::VectorXd::Zero(x.size());
    return;
  }
  inner_.log_density_and_grad(x, logp, g);
}

void BoxTruncatedTarget::block_update(const Eigen::VectorXd& x, double logp_x,
                                      const Eigen::VectorXd& grad_x,
                                      const std::vector<int>& idx,
                                      const Eigen::VectorXd& delta,
                                      const Eigen::VectorXd& x_new, double& logp_new,
                                      Eigen::VectorXd& grad_new) const {
  // only the moved coordinates can leave the box
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const double v = x_new[idx[a]];
    if (v < lo_ || v > hi_) {
      logp_new = -std::numeric_limits<double>::infinity();
      grad_new = grad_x;  // never consumed on an auto-reject
      return;
    }
  }
  inner_.block_update(x, logp_x, grad_x, idx, delta, x_new, logp_new, grad_new);
}

Preconditioner Preconditioner::from_matrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("Preconditioner: matrix not square");
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("Preconditioner: matrix not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("Preconditioner: matrix not positive definite");
  return Preconditioner{m, llt.matrixL()};
}

FdCheckResult fd_grad_check(const TargetDensity& target, const Eigen::VectorXd& x, double h,
                            double tol, double abs_tol) {
  if (h <= 0) throw std::invalid_argument("fd_grad_check: h must be positive");
  const Eigen::VectorXd g = target.grad(x);
  FdCheckResult res;
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = target.log_density(xp);
    xp[i] = x[i] - h;
    const double fm = target.log_density(xp);
    xp[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("fd_grad_check: non-finite log-density perturbing coordinate " +
                               std::to_string(i));
    const double fd = (fp - fm) / (2.0 * h);
    const double err = std::abs(fd - g[i]);
    const double denom = std::max(std::abs(g[i]), std::abs(fd));
    const double rel = (err <= abs_tol || denom == 0.0) ? 0.0 : err / denom;
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_coord = i;
    }
  }
  res.pass = res.max_rel_err < tol;
  return res;
}

}  // namespace mwg
