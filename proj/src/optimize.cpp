#include "mwg/optimize.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "mwg/io.hpp"

namespace mwg {

MapResult map_cox(const CoxModel& model, double tol, int max_iters,
                  std::vector<double>* history) {
  if (!model.has_counts()) throw std::logic_error("map_cox: counts not set");
  if (tol <= 0.0 || max_iters < 1) throw std::invalid_argument("map_cox: bad tol/max_iters");

  Eigen::VectorXd x = model.mean();
  double logp = model.log_posterior(x);
  Eigen::VectorXd grad = model.grad_log_posterior(x);
  if (history) {
    history->clear();
    history->push_back(logp);
  }

  MapResult res;
  res.x_map = x;
  res.grad_norm = grad.norm();
  while (res.grad_norm >= tol && res.iterations < max_iters) {
    Eigen::MatrixXd h = model.precision();
    h.diagonal() += x.array().exp().matrix();
    const Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("map_cox: Newton system not positive definite");
    const Eigen::VectorXd step = llt.solve(grad);

    bool accepted = false;
    double t = 1.0;
    for (int half = 0; half < 60; ++half, t *= 0.5) {
      const Eigen::VectorXd cand = x + t * step;
      const double logp_cand = model.log_posterior(cand);
      if (std::isfinite(logp_cand) && logp_cand > logp) {
        x = cand;
        logp = logp_cand;
        accepted = true;
        break;
      }
    }
    ++res.iterations;
    if (!accepted) break;
    if (history) history->push_back(logp);
    grad = model.grad_log_posterior(x);
    res.x_map = x;
    res.grad_norm = grad.norm();
  }
  res.converged = res.grad_norm < tol;
  return res;
}

MapResult map_pde(const PdeModel& model, double tol, int max_iters,
                  std::vector<double>* history) {
  if (!model.has_observations()) throw std::logic_error("map_pde: observations not set");
  if (tol <= 0.0 || max_iters < 1) throw std::invalid_argument("map_pde: bad tol/max_iters");

  const int n = model.n_theta();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  double logp;
  Eigen::VectorXd grad;
  model.log_posterior_and_grad_theta(x, logp, grad);
  if (history) {
    history->clear();
    history->push_back(logp);
  }

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd hinv = eye;  // inverse Hessian estimate of the negated posterior
  MapResult res;
  res.x_map = x;
  res.grad_norm = grad.norm();
  while (res.grad_norm >= tol && res.iterations < max_iters) {
    Eigen::VectorXd dir = hinv * grad;
    double slope = grad.dot(dir);
    if (!(slope > 0.0)) {  // estimate lost positive definiteness; restart
      hinv = eye;
      dir = grad;
      slope = grad.squaredNorm();
    }

    bool accepted = false;
    double t = 1.0;
    Eigen::VectorXd x_new, grad_new;
    double logp_new = 0.0;
    for (int half = 0; half < 60; ++half, t *= 0.5) {
      x_new = x + t * dir;
      double lp;
      Eigen::VectorXd g;
      try {
        model.log_posterior_and_grad_theta(x_new, lp, g);
      } catch (const std::runtime_error&) {  // overflowing trial steps are rejected
        continue;
      }
      if (std::isfinite(lp) && lp > logp && lp >= logp + 1e-4 * t * slope) {
        logp_new = lp;
        grad_new = g;
        accepted = true;
        break;
      }
    }
    ++res.iterations;
    if (!accepted) {
      res.converged = false;
      return res;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = grad - grad_new;  // change in the negated-posterior gradient
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }

    x = x_new;
    logp = logp_new;
    grad = grad_new;
    if (history) history->push_back(logp);
    res.x_map = x;
    res.grad_norm = grad.norm();
  }
  res.converged = res.grad_norm < tol;
  return res;
}

Eigen::MatrixXd hessian_at_map(const PdeModel& model, const Eigen::VectorXd& theta_map,
                               double fd_step) {
  const int n = model.n_theta();
  if (theta_map.size() != n) throw std::invalid_argument("hessian_at_map: theta size mismatch");
  if (fd_step <= 0.0) throw std::invalid_argument("hessian_at_map: fd_step must be positive");

  Eigen::MatrixXd j(n, n);
  Eigen::VectorXd t = theta_map;
  for (int c = 0; c < n; ++c) {
    t[c] = theta_map[c] + fd_step;
    const Eigen::VectorXd gp = model.grad_log_posterior_theta(t);
    t[c] = theta_map[c] - fd_step;
    const Eigen::VectorXd gm = model.grad_log_posterior_theta(t);
    t[c] = theta_map[c];
    j.col(c) = (gm - gp) / (2.0 * fd_step);
  }
  j = (0.5 * (j + j.transpose())).eval();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(j);
  const double lam_max = eig.eigenvalues().maxCoeff();
  if (!(lam_max > 0.0))
    throw std::domain_error("hessian_at_map: curvature not negative at the given point");
  const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(1e-6 * lam_max);
  const Eigen::MatrixXd floored =
      eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (floored + floored.transpose());
}

std::string map_cache_name(const std::string& problem, int setup, std::uint64_t seed) {
  return problem + "_setup" + std::to_string(setup) + "_seed" + std::to_string(seed) +
         "_map.csv";
}

bool load_cached_map(const std::string& dir, const std::string& problem, int setup,
                     std::uint64_t seed, Eigen::VectorXd& x) {
  const std::filesystem::path path =
      std::filesystem::path(dir) / map_cache_name(problem, setup, seed);
  if (!std::filesystem::exists(path)) return false;
  x = read_vector_csv(path.string());
  return true;
}

void store_cached_map(const std::string& dir, const std::string& problem, int setup,
                      std::uint64_t seed, const Eigen::VectorXd& x) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path path =
      std::filesystem::path(dir) / map_cache_name(problem, setup, seed);
  write_vector_csv(path.string(), x);
}

}  // namespace mwg
