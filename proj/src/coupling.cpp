#include "mwg/coupling.hpp"

#include <cmath>
#include <stdexcept>

namespace mwg {

std::vector<Scenario> coupled_sweep(CoupledPair& pair, const TargetDensity& target,
                                    const BlockPartition& part, double tau, RngStream& rng) {
  if (tau <= 0) throw std::invalid_argument("coupled_sweep: tau must be positive");
  const int m = part.num_blocks();
  std::vector<Scenario> scenarios(m);
  for (int j = 0; j < m; ++j) {
    const auto& idx = part.blocks[j];
    const Eigen::VectorXd xi = rng.normals(static_cast<int>(idx.size()));
    detail::BlockMove mx = detail::propose_block(target, pair.x, idx, tau, nullptr, nullptr, xi);
    detail::BlockMove mz = detail::propose_block(target, pair.z, idx, tau, nullptr, nullptr, xi);
    const double u = rng.uniform();
    // shared uniform: each chain accepts exactly as its solo kernel would
    const bool ax = u < mx.alpha;
    const bool az = u < mz.alpha;
    scenarios[j] = ax ? (az ? Scenario::both_accept : Scenario::accept_x_only)
                      : (az ? Scenario::accept_z_only : Scenario::both_reject);
    if (ax) detail::apply_move(pair.x, std::move(mx));
    if (az) detail::apply_move(pair.z, std::move(mz));
  }
  pair.x.sweep_index += 1;
  pair.z.sweep_index += 1;
  return scenarios;
}

Eigen::VectorXd block_distances(const ChainState& x, const ChainState& z,
                                const BlockPartition& part) {
  const int m = part.num_blocks();
  Eigen::VectorXd d(m);
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (int idx : part.blocks[j]) {
      const double diff = x.x[idx] - z.x[idx];
      s += diff * diff;
    }
    d[j] = std::sqrt(s);
  }
  return d;
}

CoupledRun run_coupled(const TargetDensity& target, const BlockPartition& part,
                       Eigen::VectorXd x0, Eigen::VectorXd z0, long sweeps, double tau,
                       std::uint64_t seed) {
  if (sweeps < 1) throw std::invalid_argument("run_coupled: sweeps must be >= 1");
  RngStream rng(seed);
  CoupledRun run;
  run.final.x = make_chain_state(target, std::move(x0));
  run.final.z = make_chain_state(target, std::move(z0));
  const int m = part.num_blocks();
  run.trace.block_dist.resize(sweeps + 1, m);
  run.trace.l2.resize(sweeps + 1);
  run.trace.block_dist.row(0) = block_distances(run.final.x, run.final.z, part);
  run.trace.l2[0] = run.trace.block_dist.row(0).norm();
  for (long k = 1; k <= sweeps; ++k) {
    const auto scenarios = coupled_sweep(run.final, target, part, tau, rng);
    for (const Scenario s : scenarios) run.scenario_counts[static_cast<int>(s)] += 1;
    run.trace.block_dist.row(k) = block_distances(run.final.x, run.final.z, part);
    run.trace.l2[k] = run.trace.block_dist.row(k).norm();
  }
  return run;
}

ContractionFit fit_contraction(const std::vector<Eigen::MatrixXd>& replica_block_dists,
                               double lambda_h, double tau, int k0, double floor_val,
                               int k1_cap) {
  const int R = static_cast<int>(replica_block_dists.size());
  if (R < 2) throw std::invalid_argument("fit_contraction: need at least 2 replicas");
  const Eigen::Index rows = replica_block_dists[0].rows();
  const Eigen::Index cols = replica_block_dists[0].cols();
  for (const auto& t : replica_block_dists)
    if (t.rows() != rows || t.cols() != cols)
      throw std::invalid_argument("fit_contraction: replica trace shapes differ");

  // average per-block distances across replicas, then take the l2 norm per sweep
  Eigen::MatrixXd mean_dist = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& t : replica_block_dists) mean_dist += t;
  mean_dist /= static_cast<double>(R);
  Eigen::VectorXd a(rows);
  for (Eigen::Index k = 0; k < rows; ++k) a[k] = mean_dist.row(k).norm();

  ContractionFit fit;
  fit.lambda_h = lambda_h;
  fit.tau = tau;
  fit.replicas = R;
  fit.predicted_rate_delta0 = 1.0 - lambda_h * tau;
  fit.k0 = k0;

  int k1 = std::min<int>(static_cast<int>(rows) - 1, k1_cap);
  for (int k = k0; k <= k1; ++k) {
    if (a[k] < floor_val) {
      k1 = k - 1;
      fit.window_truncated = true;
      break;
    }
  }
  fit.k1 = k1;
  if (k1 - k0 < 2)
    throw std::invalid_argument("fit_contraction: fewer than 3 usable sweeps in the window");

  // least squares of log a_k on k
  const int len = k1 - k0 + 1;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = k0; k <= k1; ++k) {
    const double y = std::log(a[k]);
    sx += k;
    sy += y;
    sxx += static_cast<double>(k) * k;
    sxy += k * y;
  }
  const double denom = len * sxx - sx * sx;
  const double slope = (len * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / len;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / len;
  for (int k = k0; k <= k1; ++k) {
    const double y = std::log(a[k]);
    const double fitv = intercept + slope * k;
    ss_res += (y - fitv) * (y - fitv);
    ss_tot += (y - ybar) * (y - ybar);
  }
  fit.rate_hat = std::exp(slope);
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.delta_hat = 1.0 - (1.0 - fit.rate_hat) / (lambda_h * tau);
  return fit;
}

}  // namespace mwg
