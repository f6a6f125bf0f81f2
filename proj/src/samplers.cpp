#include "mwg/samplers.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace mwg {
namespace {

// Evaluate the target at x_new (differs from s.x only on idx), reusing the
// cached values when the target supports incremental updates. Every call is
// one "evaluation" in the cost accounting.
void eval_move(const TargetDensity& t, const ChainState& s, const std::vector<int>& idx,
               const Eigen::VectorXd& delta, const Eigen::VectorXd& x_new, double& logp_new,
               Eigen::VectorXd& grad_new) {
  if (t.has_block_update())
    t.block_update(s.x, s.logp, s.grad, idx, delta, x_new, logp_new, grad_new);
  else
    t.log_density_and_grad(x_new, logp_new, grad_new);
}

// Squared proposal-space norm of r: ||L^{-1} r||^2, or ||r||^2 without a
// preconditioner.
double weighted_sq_norm(const Eigen::VectorXd& r, const Eigen::MatrixXd* lj) {
  if (lj == nullptr) return r.squaredNorm();
  return lj->triangularView<Eigen::Lower>().solve(r).squaredNorm();
}

double alpha_from_log_ratio(double log_ratio) {
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

}  // namespace

ChainState make_chain_state(const TargetDensity& target, Eigen::VectorXd x0) {
  ChainState s;
  s.x = std::move(x0);
  target.log_density_and_grad(s.x, s.logp, s.grad);
  if (!std::isfinite(s.logp))
    throw std::domain_error("make_chain_state: non-finite log-density at the initial state");
  return s;
}

BlockPreconditioner::BlockPreconditioner(const Preconditioner& full,
                                         const BlockPartition& part) {
  if (full.M.rows() != part.n)
    throw std::invalid_argument("BlockPreconditioner: size mismatch");
  const int m = part.num_blocks();
  m_.reserve(m);
  l_.reserve(m);
  for (int j = 0; j < m; ++j) {
    const auto& blk = part.blocks[j];
    Eigen::MatrixXd sub(blk.size(), blk.size());
    for (std::size_t a = 0; a < blk.size(); ++a)
      for (std::size_t b = 0; b < blk.size(); ++b) sub(a, b) = full.M(blk[a], blk[b]);
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument(
          "BlockPreconditioner: sub-block " + std::to_string(j) + " not positive definite");
    m_.push_back(std::move(sub));
    l_.push_back(llt.matrixL());
  }
}

namespace detail {

BlockMove propose_block(const TargetDensity& target, const ChainState& s,
                        const std::vector<int>& idx, double tau, const Eigen::MatrixXd* mj,
                        const Eigen::MatrixXd* lj, const Eigen::VectorXd& xi) {
  const int q = static_cast<int>(idx.size());
  BlockMove mv;

  Eigen::VectorXd v(q);  // current gradient restricted to the block
  for (int a = 0; a < q; ++a) v[a] = s.grad[idx[a]];

  const Eigen::VectorXd drift = (mj == nullptr) ? Eigen::VectorXd(tau * v)
                                                : Eigen::VectorXd(tau * (*mj * v));
  const Eigen::VectorXd noise = (lj == nullptr)
                                    ? Eigen::VectorXd(std::sqrt(2.0 * tau) * xi)
                                    : Eigen::VectorXd(std::sqrt(2.0 * tau) * (*lj * xi));
  mv.delta = drift + noise;
  mv.x_new = s.x;
  for (int a = 0; a < q; ++a) mv.x_new[idx[a]] += mv.delta[a];

  eval_move(target, s, idx, mv.delta, mv.x_new, mv.logp_new, mv.grad_new);
  mv.finite = std::isfinite(mv.logp_new);
  if (!mv.finite) {
    mv.alpha = 0.0;
    return mv;
  }

  Eigen::VectorXd v_new(q);
  for (int a = 0; a < q; ++a) v_new[a] = mv.grad_new[idx[a]];

  // forward residual is exactly the noise term; reverse residual is
  // -delta - tau*M*v(proposal)
  const Eigen::VectorXd rev = (mj == nullptr)
                                  ? Eigen::VectorXd(-mv.delta - tau * v_new)
                                  : Eigen::VectorXd(-mv.delta - tau * (*mj * v_new));
  const double log_ratio =
      (mv.logp_new - s.logp) -
      (weighted_sq_norm(rev, lj) - weighted_sq_norm(noise, lj)) / (4.0 * tau);
  mv.alpha = alpha_from_log_ratio(log_ratio);
  return mv;
}

void apply_move(ChainState& s, BlockMove&& mv) {
  s.x = std::move(mv.x_new);
  s.logp = mv.logp_new;
  s.grad = std::move(mv.grad_new);
}

}  // namespace detail

double forced_block_alpha(const TargetDensity& target, const ChainState& s,
                          const std::vector<int>& idx, double tau,
                          const Eigen::VectorXd& delta, const Eigen::MatrixXd* mj,
                          const Eigen::MatrixXd* lj) {
  if (tau <= 0) throw std::invalid_argument("forced_block_alpha: tau must be positive");
  const int q = static_cast<int>(idx.size());
  ChainState tmp = s;
  detail::BlockMove mv;
  mv.delta = delta;
  mv.x_new = s.x;
  for (int a = 0; a < q; ++a) mv.x_new[idx[a]] += delta[a];
  eval_move(target, tmp, idx, mv.delta, mv.x_new, mv.logp_new, mv.grad_new);
  if (!std::isfinite(mv.logp_new)) return 0.0;

  Eigen::VectorXd v(q), v_new(q);
  for (int a = 0; a < q; ++a) {
    v[a] = s.grad[idx[a]];
    v_new[a] = mv.grad_new[idx[a]];
  }
  const Eigen::VectorXd fwd = (mj == nullptr) ? Eigen::VectorXd(delta - tau * v)
                                              : Eigen::VectorXd(delta - tau * (*mj * v));
  const Eigen::VectorXd rev = (mj == nullptr)
                                  ? Eigen::VectorXd(-delta - tau * v_new)
                                  : Eigen::VectorXd(-delta - tau * (*mj * v_new));
  const double log_ratio =
      (mv.logp_new - s.logp) -
      (weighted_sq_norm(rev, lj) - weighted_sq_norm(fwd, lj)) / (4.0 * tau);
  return alpha_from_log_ratio(log_ratio);
}

SweepRecord mwg_sweep(const TargetDensity& target, const BlockPartition& part,
                      ChainState& state, double tau, const BlockPreconditioner* precond,
                      RngStream& rng) {
  if (tau <= 0) throw std::invalid_argument("mwg_sweep: tau must be positive");
  if (precond != nullptr && precond->num_blocks() != part.num_blocks())
    throw std::invalid_argument("mwg_sweep: preconditioner/partition mismatch");
  const int m = part.num_blocks();
  SweepRecord rec;
  rec.blocks.resize(m);
  for (int j = 0; j < m; ++j) {
    const auto& idx = part.blocks[j];
    // fixed draw order per block: q normals, then one uniform
    const Eigen::VectorXd xi = rng.normals(static_cast<int>(idx.size()));
    const Eigen::MatrixXd* mj = precond ? &precond->M(j) : nullptr;
    const Eigen::MatrixXd* lj = precond ? &precond->L(j) : nullptr;
    detail::BlockMove mv = detail::propose_block(target, state, idx, tau, mj, lj, xi);
    rec.n_evals += 1;
    const double u = rng.uniform();

    auto& out = rec.blocks[j];
    out.proposed = true;
    out.alpha = mv.alpha;
    out.auto_rejected = !mv.finite;
    out.accepted = u < mv.alpha;
    if (out.accepted) detail::apply_move(state, std::move(mv));
  }
  state.sweep_index += 1;
  return rec;
}

SweepRecord mala_step(const TargetDensity& target, ChainState& state, double tau,
                      const Preconditioner* precond, RngStream& rng) {
  // single-block sweep: identical code path and RNG consumption as mwg with m=1
  const BlockPartition whole = single_block(target.dim());
  if (precond == nullptr) return mwg_sweep(target, whole, state, tau, nullptr, rng);
  const BlockPreconditioner bp(*precond, whole);
  return mwg_sweep(target, whole, state, tau, &bp, rng);
}

PcnState make_pcn_state(const PcnTarget& target, Eigen::VectorXd x0) {
  PcnState s;
  s.x = std::move(x0);
  s.loglik = target.log_likelihood(s.x);
  if (!std::isfinite(s.loglik))
    throw std::domain_error("make_pcn_state: non-finite log-likelihood at the initial state");
  return s;
}

BlockOutcome pcn_step(const PcnTarget& target, PcnState& state, double beta, RngStream& rng) {
  if (beta <= 0.0 || beta > 1.0)
    throw std::invalid_argument("pcn_step: beta must lie in (0, 1]");
  const Eigen::VectorXd xi = rng.normals(target.n);
  const Eigen::VectorXd prop = std::sqrt(1.0 - beta * beta) * state.x + beta * xi;
  const double ll = target.log_likelihood(prop);
  const double u = rng.uniform();

  BlockOutcome out;
  out.proposed = true;
  if (!std::isfinite(ll)) {
    out.auto_rejected = true;
    out.alpha = 0.0;
  } else {
    out.alpha = alpha_from_log_ratio(ll - state.loglik);
  }
  out.accepted = u < out.alpha;
  if (out.accepted) {
    state.x = prop;
    state.loglik = ll;
  }
  state.step_index += 1;
  return out;
}

ChainRun run_chain(const TargetDensity* target, const KernelSpec& spec, Eigen::VectorXd init,
                   long steps, std::uint64_t seed, int thin) {
  if (steps < 1) throw std::invalid_argument("run_chain: steps must be >= 1");
  if (thin < 1) throw std::invalid_argument("run_chain: thin must be >= 1");

  RngStream rng(seed);
  ChainRun run;
  run.steps = steps;
  run.thin = thin;
  run.precond_mode = "none";
  const long retained = steps / thin;

  double alpha_sum = 0.0;
  long proposals = 0, accepts = 0;

  auto tally = [&](const SweepRecord& rec) {
    run.n_evals += rec.n_evals;
    for (const auto& b : rec.blocks) {
      alpha_sum += b.alpha;
      proposals += 1;
      accepts += b.accepted ? 1 : 0;
      run.auto_rejects += b.auto_rejected ? 1 : 0;
    }
  };

  if (spec.kind == KernelKind::pcn) {
    if (spec.pcn == nullptr) throw std::invalid_argument("run_chain: pcn spec missing");
    PcnState s = make_pcn_state(*spec.pcn, std::move(init));
    run.samples.resize(retained, spec.pcn->n);
    long row = 0;
    for (long k = 1; k <= steps; ++k) {
      const BlockOutcome out = pcn_step(*spec.pcn, s, spec.tau, rng);
      alpha_sum += out.alpha;
      proposals += 1;
      accepts += out.accepted ? 1 : 0;
      run.auto_rejects += out.auto_rejected ? 1 : 0;
      run.n_evals += 1;
      if (k % thin == 0) run.samples.row(row++) = s.x;
    }
  } else {
    if (target == nullptr) throw std::invalid_argument("run_chain: target missing");
    const BlockPartition whole = single_block(target->dim());
    const BlockPartition* part = &whole;
    if (spec.kind == KernelKind::mwg) {
      if (spec.part == nullptr) throw std::invalid_argument("run_chain: partition missing");
      part = spec.part;
    }
    std::unique_ptr<BlockPreconditioner> bp;
    if (spec.precond != nullptr) {
      bp = std::make_unique<BlockPreconditioner>(*spec.precond, *part);
      run.precond_mode =
          (spec.kind == KernelKind::mwg && part->num_blocks() > 1) ? "block-restricted"
                                                                   : "full";
    }
    ChainState s = make_chain_state(*target, std::move(init));
    run.samples.resize(retained, target->dim());
    long row = 0;
    for (long k = 1; k <= steps; ++k) {
      tally(mwg_sweep(*target, *part, s, spec.tau, bp.get(), rng));
      if (k % thin == 0) run.samples.row(row++) = s.x;
    }
  }

  run.mean_alpha = proposals > 0 ? alpha_sum / static_cast<double>(proposals) : 0.0;
  run.accept_rate = proposals > 0 ? static_cast<double>(accepts) / proposals : 0.0;
  return run;
}

}  // namespace mwg
