#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mwg/partition.hpp"
#include "mwg/rng.hpp"
#include "mwg/target.hpp"

namespace mwg {

// Chain iterate with its cached target evaluations; the caches are kept
// consistent with x across accepted moves so a sweep costs exactly one
// target evaluation per block proposal.
struct ChainState {
  Eigen::VectorXd x;
  double logp = 0.0;
  Eigen::VectorXd grad;
  long sweep_index = 0;
};

// One evaluation; throws if the density is not finite at x0.
ChainState make_chain_state(const TargetDensity& target, Eigen::VectorXd x0);

struct BlockOutcome {
  double alpha = 0.0;        // acceptance probability, in [0,1]
  bool proposed = false;
  bool accepted = false;
  bool auto_rejected = false;  // proposal had non-finite density
};

struct SweepRecord {
  std::vector<BlockOutcome> blocks;
  int n_evals = 0;  // density+gradient evaluations this sweep
};

// Per-block restriction of a preconditioner: M_j = M[block_j, block_j] with
// its own Cholesky factor. A single-block restriction reproduces the full
// preconditioner exactly.
class BlockPreconditioner {
 public:
  BlockPreconditioner(const Preconditioner& full, const BlockPartition& part);

  const Eigen::MatrixXd& M(int j) const { return m_[j]; }
  const Eigen::MatrixXd& L(int j) const { return l_[j]; }
  int num_blocks() const { return static_cast<int>(m_.size()); }

 private:
  std::vector<Eigen::MatrixXd> m_, l_;
};

namespace detail {

// A proposed move on one index block, with everything needed to decide and
// apply it. Shared by the solo kernels and the coupled sweeps so that both
// consume randomness and arithmetic identically.
struct BlockMove {
  Eigen::VectorXd delta;     // increment on the block coordinates
  Eigen::VectorXd x_new;     // full proposed state
  double logp_new = 0.0;
  Eigen::VectorXd grad_new;  // full gradient at the proposal
  double alpha = 0.0;
  bool finite = false;
};

// Langevin block proposal from cached state values: delta = tau*M_j*v_j +
// sqrt(2 tau)*L_j*xi, with M_j = I when mj/lj are null. Computes the exact
// Metropolis-Hastings ratio for the Gaussian proposal with covariance
// 2*tau*M_j.
BlockMove propose_block(const TargetDensity& target, const ChainState& s,
                        const std::vector<int>& idx, double tau, const Eigen::MatrixXd* mj,
                        const Eigen::MatrixXd* lj, const Eigen::VectorXd& xi);

void apply_move(ChainState& s, BlockMove&& mv);

}  // namespace detail

// Acceptance probability of a *given* block increment (no randomness); lets
// tests pin the acceptance formula against hand-computed values.
double forced_block_alpha(const TargetDensity& target, const ChainState& s,
                          const std::vector<int>& idx, double tau,
                          const Eigen::VectorXd& delta, const Eigen::MatrixXd* mj = nullptr,
                          const Eigen::MatrixXd* lj = nullptr);

// Full-state Langevin step (single-block sweep). Draws n normals then one
// uniform.
SweepRecord mala_step(const TargetDensity& target, ChainState& state, double tau,
                      const Preconditioner* precond, RngStream& rng);

// One Gibbs sweep over all blocks in partition order; per block draws q_j
// normals then one uniform, always in that order, whether or not the proposal
// is viable (keeps streams alignable across chains).
SweepRecord mwg_sweep(const TargetDensity& target, const BlockPartition& part,
                      ChainState& state, double tau, const BlockPreconditioner* precond,
                      RngStream& rng);

// Likelihood-only target for pCN; the reference measure is the standard
// normal prior on the sampled coordinates and never enters the ratio.
struct PcnTarget {
  int n = 0;
  std::function<double(const Eigen::VectorXd&)> log_likelihood;
};

struct PcnState {
  Eigen::VectorXd x;
  double loglik = 0.0;
  long step_index = 0;
};

PcnState make_pcn_state(const PcnTarget& target, Eigen::VectorXd x0);

BlockOutcome pcn_step(const PcnTarget& target, PcnState& state, double beta, RngStream& rng);

enum class KernelKind { mala, mwg, pcn };

struct KernelSpec {
  KernelKind kind = KernelKind::mala;
  double tau = 0.1;  // step size for mala/mwg, beta for pcn
  const BlockPartition* part = nullptr;        // mwg only
  const Preconditioner* precond = nullptr;     // mala/mwg, optional
  const PcnTarget* pcn = nullptr;              // pcn only
};

struct ChainRun {
  Eigen::MatrixXd samples;   // retained states, one per row
  double mean_alpha = 0.0;   // acceptance probability averaged over proposals
  double accept_rate = 0.0;  // fraction of proposals accepted
  long n_evals = 0;
  long auto_rejects = 0;
  long steps = 0;
  int thin = 1;
  std::string precond_mode;  // "none", "full" or "block-restricted"
};

// Deterministic given seed; retains states after steps s with s % thin == 0.
ChainRun run_chain(const TargetDensity* target, const KernelSpec& spec, Eigen::VectorXd init,
                   long steps, std::uint64_t seed, int thin = 1);

}  // namespace mwg
