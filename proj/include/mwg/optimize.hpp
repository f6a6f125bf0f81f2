#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mwg/cox.hpp"
#include "mwg/pde.hpp"

namespace mwg {

// Posterior-mode search results used to initialize chains.
struct MapResult {
  Eigen::VectorXd x_map;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Newton ascent on the log-Gaussian Cox posterior starting from the
// prior mean. The likelihood Hessian is exactly -diag(exp(x)), so the
// Gauss-Newton matrix B^{-1} + diag(exp(x)) is the full negative Hessian and
// each step solves it against the current gradient, halving the step until
// the log-posterior strictly increases. Requires counts to be attached.
// If non-null, `history` collects the log-posterior after every accepted step
// (first entry: the starting point).
MapResult map_cox(const CoxModel& model, double tol = 1e-6, int max_iters = 100,
                  std::vector<double>* history = nullptr);

// BFGS ascent on the latent-coefficient posterior from theta = 0 with a
// backtracking Armijo line search. A failed line search returns
// converged=false at the last iterate. Requires observations to be attached.
MapResult map_pde(const PdeModel& model, double tol = 1e-5, int max_iters = 500,
                  std::vector<double>* history = nullptr);

// Negative-Hessian of the latent-coefficient log-posterior at theta_map via
// central finite differences of the analytic gradient (2 n_theta adjoint
// evaluations), symmetrized, and eigenvalue-floored at 1e-6 * lambda_max so
// the result is safely positive definite.
Eigen::MatrixXd hessian_at_map(const PdeModel& model, const Eigen::VectorXd& theta_map,
                               double fd_step = 1e-5);

// File-based cache for MAP vectors keyed by (problem, setup, seed) so
// repeated sampler runs skip the optimization.
std::string map_cache_name(const std::string& problem, int setup, std::uint64_t seed);
bool load_cached_map(const std::string& dir, const std::string& problem, int setup,
                     std::uint64_t seed, Eigen::VectorXd& x);
void store_cached_map(const std::string& dir, const std::string& problem, int setup,
                      std::uint64_t seed, const Eigen::VectorXd& x);

}  // namespace mwg
