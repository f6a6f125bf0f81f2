#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mwg/partition.hpp"
#include "mwg/samplers.hpp"

namespace mwg {

// Two chains advanced with shared randomness (one xi and one uniform per
// block). Each chain's marginal law is exactly the solo sweep kernel.
struct CoupledPair {
  ChainState x, z;
};

enum class Scenario : std::uint8_t {
  both_accept = 0,
  both_reject = 1,
  accept_x_only = 2,
  accept_z_only = 3,
};

// One sweep of the maximally coupled pair: per block, both proposals are
// built from the same xi, and one shared uniform classifies the outcome.
std::vector<Scenario> coupled_sweep(CoupledPair& pair, const TargetDensity& target,
                                    const BlockPartition& part, double tau, RngStream& rng);

// Per-block Euclidean distances between the two chains.
Eigen::VectorXd block_distances(const ChainState& x, const ChainState& z,
                                const BlockPartition& part);

// Distance history of a coupled run: row k holds the per-block distances
// after k sweeps (row 0 is the initial gap), plus their l2 norms.
struct DistanceTrace {
  Eigen::MatrixXd block_dist;  // (sweeps+1) x m
  Eigen::VectorXd l2;          // sweeps+1
};

struct CoupledRun {
  DistanceTrace trace;
  std::array<long, 4> scenario_counts{};  // indexed by Scenario
  CoupledPair final;
};

CoupledRun run_coupled(const TargetDensity& target, const BlockPartition& part,
                       Eigen::VectorXd x0, Eigen::VectorXd z0, long sweeps, double tau,
                       std::uint64_t seed);

// Least-squares geometric fit of the replica-averaged distance decay:
// per-block distances are averaged across replicas first, then normed
// (matching the (E||Delta||)^2 form of the contraction bound), and
// log ||E D_k|| is regressed on k over [k0, k1].
struct ContractionFit {
  double rate_hat = 0.0;   // fitted per-sweep contraction factor
  double r2 = 0.0;
  double lambda_h = 0.0;   // concavity margin supplied by the caller
  double tau = 0.0;
  double delta_hat = 0.0;  // empirical slack: 1 - (1-rate_hat)/(lambda_h*tau)
  double predicted_rate_delta0 = 0.0;  // 1 - lambda_h*tau
  int k0 = 0, k1 = 0;
  int replicas = 0;
  bool window_truncated = false;  // distance hit the floor before k1_cap
};

ContractionFit fit_contraction(const std::vector<Eigen::MatrixXd>& replica_block_dists,
                               double lambda_h, double tau, int k0 = 5,
                               double floor_val = 1e-8, int k1_cap = 500);

}  // namespace mwg
