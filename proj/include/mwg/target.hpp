#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mwg/partition.hpp"

namespace mwg {

// Interface every sampler consumes: unnormalized log-density and its gradient.
// Implementations must be deterministic in x and re-entrant (no mutation
// during evaluation).
class TargetDensity {
 public:
  virtual ~TargetDensity() = default;

  virtual int dim() const = 0;

  // Log-density up to an additive constant.
  virtual double log_density(const Eigen::VectorXd& x) const = 0;

  virtual Eigen::VectorXd grad(const Eigen::VectorXd& x) const = 0;

  // Combined evaluation; targets override when the two share intermediate work
  // (matrix solves, factorizations).
  virtual void log_density_and_grad(const Eigen::VectorXd& x, double& logp,
                                    Eigen::VectorXd& g) const {
    logp = log_density(x);
    g = grad(x);
  }

  // Restriction of grad(x) to block j of the partition.
  virtual Eigen::VectorXd block_grad(int j, const Eigen::VectorXd& x,
                                     const BlockPartition& part) const;

  // Fast path for proposals that modify only the coordinates in `idx`:
  // given cached (logp_x, grad_x) at x and x_new = x + scatter(idx, delta),
  // produce (logp_new, grad_new). The default recomputes from scratch;
  // targets with cheap local structure override both methods.
  virtual bool has_block_update() const { return false; }
  virtual void block_update(const Eigen::VectorXd& x, double logp_x,
                            const Eigen::VectorXd& grad_x, const std::vector<int>& idx,
                            const Eigen::VectorXd& delta, const Eigen::VectorXd& x_new,
                            double& logp_new, Eigen::VectorXd& grad_new) const;
};

// Symmetric positive definite mass matrix with its lower Cholesky factor,
// used by preconditioned proposals.
struct Preconditioner {
  Eigen::MatrixXd M;
  Eigen::MatrixXd chol;  // lower triangular, M = chol * chol^T

  static Preconditioner from_matrix(const Eigen::MatrixXd& m);
};

// Restricts a target to the box [lo, hi]^n: the density is unchanged inside
// and -inf outside, so samplers auto-reject proposals leaving the box.
// Gradients are only ever queried inside.
class BoxTruncatedTarget : public TargetDensity {
 public:
  BoxTruncatedTarget(const TargetDensity& inner, double lo, double hi);

  int dim() const override { return inner_.dim(); }
  double log_density(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const override { return inner_.grad(x); }
  void log_density_and_grad(const Eigen::VectorXd& x, double& logp,
                            Eigen::VectorXd& g) const override;

  bool has_block_update() const override { return inner_.has_block_update(); }
  void block_update(const Eigen::VectorXd& x, double logp_x, const Eigen::VectorXd& grad_x,
                    const std::vector<int>& idx, const Eigen::VectorXd& delta,
                    const Eigen::VectorXd& x_new, double& logp_new,
                    Eigen::VectorXd& grad_new) const override;

 private:
  bool inside(const Eigen::VectorXd& x) const;

  const TargetDensity& inner_;
  double lo_, hi_;
};

// Central-difference gradient verification. The reported error per coordinate
// is relative to max(|analytic|, |fd|); absolute discrepancies below abs_tol
// count as exact (stationary points).
struct FdCheckResult {
  bool pass = false;
  double max_rel_err = 0.0;
  int worst_coord = -1;
};

FdCheckResult fd_grad_check(const TargetDensity& target, const Eigen::VectorXd& x, double h,
                            double tol, double abs_tol = 1e-10);

}  // namespace mwg
