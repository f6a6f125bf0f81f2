#include "mwg/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "mwg/concavity.hpp"
#include "mwg/coupling.hpp"
#include "mwg/cox.hpp"
#include "mwg/diagnostics.hpp"
#include "mwg/gmrf.hpp"
#include "mwg/io.hpp"
#include "mwg/optimize.hpp"
#include "mwg/partition.hpp"
#include "mwg/pde.hpp"
#include "mwg/samplers.hpp"

namespace mwg {

namespace {

using nlohmann::json;

json config_json(const ExperimentConfig& c) {
  return json{{"problem", c.problem},   {"sampler", c.sampler},
              {"side", c.side},         {"setup", c.setup},
              {"n", c.n},               {"ell", c.ell},
              {"block", c.block},       {"tau", c.tau},
              {"steps", c.steps},       {"replicas", c.replicas},
              {"seed", c.seed},         {"data_seed", c.data_seed},
              {"thin", c.thin},         {"out", c.out},
              {"cache_dir", c.cache_dir}};
}

// Exit-code policy: configuration problems are invalid_argument/logic_error
// (2); anything numerical that surfaces as domain/runtime errors is 3.
template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::logic_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  }
}

std::string cache_dir_for(const ExperimentConfig& cfg) {
  if (!cfg.cache_dir.empty()) return cfg.cache_dir;
  const auto parent = std::filesystem::path(cfg.out).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

// Everything one chain needs, with owned models so pcn closures stay valid.
struct ExperimentParts {
  std::unique_ptr<CoxModel> cox;
  std::unique_ptr<PdeModel> pde;
  std::unique_ptr<GaussianTarget> gauss;
  std::unique_ptr<CoxTarget> cox_target;
  std::unique_ptr<PdeTarget> pde_target;
  const TargetDensity* target = nullptr;
  BlockPartition part;
  Preconditioner precond;
  bool use_precond = false;
  PcnTarget pcn;
  Eigen::VectorXd init;      // in kernel coordinates
  Eigen::MatrixXd unwhiten;  // when non-empty: observable x = shift + unwhiten * u
  Eigen::VectorXd shift;
  int dim = 0;
};

Eigen::VectorXd map_with_cache(const ExperimentConfig& cfg, const std::string& problem,
                               int setup_key, std::function<MapResult()> solve) {
  const std::string dir = cache_dir_for(cfg);
  Eigen::VectorXd x;
  if (load_cached_map(dir, problem, setup_key, cfg.data_seed, x)) return x;
  const MapResult res = solve();
  if (!res.converged)
    throw std::runtime_error("map search did not converge (grad norm " +
                             std::to_string(res.grad_norm) + ")");
  store_cached_map(dir, problem, setup_key, cfg.data_seed, res.x_map);
  return res.x_map;
}

ExperimentParts build_cox_parts(const ExperimentConfig& cfg) {
  ExperimentParts p;
  p.cox = std::make_unique<CoxModel>(cfg.side);
  p.cox->set_counts(simulate_cox(*p.cox, cfg.data_seed).y);
  p.dim = p.cox->dim();

  const CoxModel* model = p.cox.get();
  const Eigen::VectorXd x_map = map_with_cache(
      cfg, "cox", cfg.side, [model] { return map_cox(*model); });

  if (cfg.sampler == "pcn") {
    const Eigen::MatrixXd lc =
        Eigen::LLT<Eigen::MatrixXd>(model->covariance()).matrixL();
    const Eigen::VectorXd shift = model->mean();
    const Eigen::VectorXd y = model->counts();
    p.pcn.n = p.dim;
    p.pcn.log_likelihood = [lc, shift, y](const Eigen::VectorXd& u) {
      const Eigen::VectorXd x = shift + lc * u;
      if ((x.array() > CoxModel::overflow_threshold).any())
        return -std::numeric_limits<double>::infinity();
      return (y.array() * x.array() - x.array().exp()).sum();
    };
    p.init = lc.triangularView<Eigen::Lower>().solve(x_map - shift);
    p.unwhiten = lc;
    p.shift = shift;
    return p;
  }

  p.cox_target = std::make_unique<CoxTarget>(*p.cox);
  p.target = p.cox_target.get();
  p.init = x_map;
  if (cfg.sampler == "mwg") {
    p.part = make_tiles_2d(cfg.side, cfg.block);
    p.precond = mmala_proposal_preconditioner(*p.cox);
    p.use_precond = true;
  } else {
    p.part = single_block(p.dim);
    if (cfg.sampler == "mmala") {
      p.precond = mmala_proposal_preconditioner(*p.cox);
      p.use_precond = true;
    }
  }
  return p;
}

ExperimentParts build_pde_parts(const ExperimentConfig& cfg) {
  ExperimentParts p;
  p.pde = std::make_unique<PdeModel>(pde_setup(cfg.setup));
  p.pde->set_observations(simulate_pde_data(*p.pde, cfg.data_seed).y);
  p.dim = p.pde->n_theta();

  const PdeModel* model = p.pde.get();
  const Eigen::VectorXd theta_map = map_with_cache(
      cfg, "pde", cfg.setup, [model] { return map_pde(*model); });
  p.init = theta_map;

  if (cfg.sampler == "pcn") {
    p.pcn.n = p.dim;
    p.pcn.log_likelihood = [model](const Eigen::VectorXd& theta) {
      try {
        return model->log_likelihood_theta(theta);
      } catch (const std::runtime_error&) {
        return -std::numeric_limits<double>::infinity();
      }
    };
    return p;
  }

  p.pde_target = std::make_unique<PdeTarget>(*p.pde);
  p.target = p.pde_target.get();

  // curvature at the mode supplies the proposal covariance
  const Eigen::MatrixXd j = hessian_at_map(*p.pde, theta_map);
  const Eigen::MatrixXd jinv = Eigen::LLT<Eigen::MatrixXd>(j).solve(
      Eigen::MatrixXd::Identity(p.dim, p.dim));
  p.precond = Preconditioner::from_matrix(0.5 * (jinv + jinv.transpose()));
  p.use_precond = true;
  p.part = cfg.sampler == "mwg" ? make_uniform_1d(p.dim, cfg.block) : single_block(p.dim);
  return p;
}

ExperimentParts build_gauss_parts(const ExperimentConfig& cfg) {
  ExperimentParts p;
  const Eigen::MatrixXd cov = exp_cov_1d(cfg.n, cfg.ell);
  p.gauss = std::make_unique<GaussianTarget>(
      GaussianTarget::from_covariance(Eigen::VectorXd::Zero(cfg.n), cov));
  p.dim = cfg.n;

  if (cfg.sampler == "pcn") {
    const Eigen::MatrixXd lc = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
    p.pcn.n = cfg.n;
    p.pcn.log_likelihood = [](const Eigen::VectorXd&) { return 0.0; };
    p.init = Eigen::VectorXd::Zero(cfg.n);
    p.unwhiten = lc;
    p.shift = Eigen::VectorXd::Zero(cfg.n);
    return p;
  }

  p.target = p.gauss.get();
  p.init = Eigen::VectorXd::Zero(cfg.n);
  p.part = cfg.sampler == "mwg" ? make_uniform_1d(cfg.n, cfg.block) : single_block(cfg.n);
  return p;
}

ExperimentParts build_parts(const ExperimentConfig& cfg) {
  if (cfg.problem == "cox") return build_cox_parts(cfg);
  if (cfg.problem == "pde") return build_pde_parts(cfg);
  return build_gauss_parts(cfg);
}

json summary_json(const ExperimentConfig& cfg, const SampleSummary& s) {
  return json{{"problem", cfg.problem},
              {"sampler", cfg.sampler},
              {"iact_mean", s.iact_mean},
              {"iact_max", s.iact_max},
              {"acceptance", s.accept_rate},
              {"mean_alpha", s.mean_alpha},
              {"tau", cfg.tau},
              {"steps", s.steps},
              {"n_evals", s.n_evals},
              {"auto_rejects", s.auto_rejects},
              {"cost_per_ess", s.cost_per_ess},
              {"n_blocks", s.n_blocks},
              {"dim", s.dim},
              {"precond_mode", s.precond_mode},
              {"config", config_json(cfg)}};
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (cfg.problem != "cox" && cfg.problem != "pde" && cfg.problem != "gauss1d")
    fail("problem must be cox, pde or gauss1d");
  if (cfg.sampler != "mala" && cfg.sampler != "mwg" && cfg.sampler != "mmala" &&
      cfg.sampler != "pcn")
    fail("sampler must be mala, mwg, mmala or pcn");
  if (cfg.steps < 1) fail("steps must be positive");
  if (cfg.thin < 1) fail("thin must be positive");
  if (cfg.replicas < 1) fail("replicas must be positive");
  if (!(cfg.tau > 0.0)) fail("tau must be positive");
  if (cfg.sampler == "pcn" && cfg.tau > 1.0) fail("pcn step size must lie in (0, 1]");
  if (cfg.out.empty()) fail("output path must not be empty");
  if (cfg.block < 0) fail("block size must be non-negative");

  if (cfg.problem == "cox") {
    if (cfg.side < 2) fail("grid side must be at least 2");
    if (cfg.sampler == "mwg" && (cfg.block < 1 || cfg.side % cfg.block != 0))
      fail("tile side must divide the grid side");
  } else if (cfg.problem == "pde") {
    if (cfg.setup != 1 && cfg.setup != 2) fail("setup must be 1 or 2");
    const int nt = cfg.setup == 1 ? 30 : 136;
    if (cfg.sampler == "mwg" && (cfg.block < 1 || nt % cfg.block != 0))
      fail("block size must divide the latent dimension");
  } else {
    if (cfg.n < 2) fail("dimension must be at least 2");
    if (!(cfg.ell > 0.0)) fail("correlation length must be positive");
    if (cfg.sampler == "mwg" && (cfg.block < 1 || cfg.n % cfg.block != 0))
      fail("block size must divide the dimension");
    if (cfg.sampler == "mmala") fail("mmala needs a curvature metric; use cox or pde");
  }
}

SampleSummary run_sample_experiment(const ExperimentConfig& cfg, Eigen::MatrixXd* samples) {
  validate_config(cfg);
  const ExperimentParts parts = build_parts(cfg);

  KernelSpec spec;
  spec.tau = cfg.tau;
  if (cfg.sampler == "pcn") {
    spec.kind = KernelKind::pcn;
    spec.pcn = &parts.pcn;
  } else {
    spec.kind = cfg.sampler == "mwg" ? KernelKind::mwg : KernelKind::mala;
    if (spec.kind == KernelKind::mwg) spec.part = &parts.part;
    if (parts.use_precond) spec.precond = &parts.precond;
  }

  const ChainRun run = run_chain(parts.target, spec, parts.init, cfg.steps, cfg.seed, cfg.thin);
  Eigen::MatrixXd chain = run.samples;
  if (parts.unwhiten.size() > 0)
    chain = ((chain * parts.unwhiten.transpose()).rowwise() + parts.shift.transpose()).eval();

  const GridIact gi = grid_iact(chain);
  SampleSummary s;
  s.iact_mean = gi.mean;
  s.iact_max = gi.max;
  s.accept_rate = run.accept_rate;
  s.mean_alpha = run.mean_alpha;
  s.steps = run.steps;
  s.n_evals = run.n_evals;
  s.auto_rejects = run.auto_rejects;
  s.n_blocks = cfg.sampler == "pcn" ? 1 : static_cast<int>(parts.part.blocks.size());
  s.dim = parts.dim;
  s.precond_mode = cfg.sampler == "pcn" ? "none" : run.precond_mode;
  s.cost_per_ess =
      gi.mean * (static_cast<double>(run.n_evals) / static_cast<double>(run.steps));
  if (samples != nullptr) *samples = std::move(chain);
  return s;
}

Eigen::MatrixXd concavity_table(bool raw) {
  const double ells[3] = {2.0, 1.0, 0.5};
  const int qs[6] = {1, 2, 4, 8, 16, 32};
  const int n = 64;
  Eigen::MatrixXd table(3, 6);
  for (int r = 0; r < 3; ++r) {
    const double ell_eff = raw ? ells[r] : ells[r] / 2.0;
    const GaussianTarget g = GaussianTarget::from_covariance(Eigen::VectorXd::Zero(n),
                                                             exp_cov_1d(n, ell_eff));
    for (int c = 0; c < 6; ++c) {
      const int q_eff = raw ? qs[c] : 2 * qs[c];
      table(r, c) = build_h_from_precision(g.precision(), make_uniform_1d(n, q_eff)).margin;
    }
  }
  return table;
}

int cmd_concavity(const ExperimentConfig& cfg, bool raw) {
  return guarded([&] {
    if (cfg.out.empty()) throw std::invalid_argument("output path must not be empty");
    const Eigen::MatrixXd table = concavity_table(raw);
    const double ells[3] = {2.0, 1.0, 0.5};
    std::string csv = "ell,q=1,q=2,q=4,q=8,q=16,q=32\n";
    for (int r = 0; r < 3; ++r) {
      csv += format_double(ells[r]);
      for (int c = 0; c < 6; ++c) csv += "," + format_double(table(r, c));
      csv += "\n";
    }
    write_text_atomic(cfg.out + "_table.csv", csv);
    return 0;
  });
}

int cmd_sample(const ExperimentConfig& cfg) {
  return guarded([&] {
    Eigen::MatrixXd chain;
    const SampleSummary s = run_sample_experiment(cfg, &chain);
    write_chain_csv(cfg.out + "_chain.csv", chain, s.accept_rate, s.n_evals);
    write_text_atomic(cfg.out + "_summary.json", summary_json(cfg, s).dump(2) + "\n");
    return 0;
  });
}

int cmd_couple(const ExperimentConfig& cfg) {
  return guarded([&] {
    validate_config(cfg);
    if (cfg.problem != "gauss1d")
      throw std::invalid_argument("couple runs on the gauss1d benchmark only");
    if (cfg.block < 1 || cfg.n % cfg.block != 0)
      throw std::invalid_argument("block size must divide the dimension");
    if (cfg.replicas < 2) throw std::invalid_argument("couple needs at least 2 replicas");

    const GaussianTarget g = GaussianTarget::from_covariance(
        Eigen::VectorXd::Zero(cfg.n), exp_cov_1d(cfg.n, cfg.ell));
    const BlockPartition part = make_uniform_1d(cfg.n, cfg.block);
    const double margin = build_h_from_precision(g.precision(), part).margin;

    RngStream init(cfg.seed);
    std::vector<Eigen::MatrixXd> traces;
    traces.reserve(cfg.replicas);
    for (long r = 0; r < cfg.replicas; ++r) {
      const Eigen::VectorXd x0 = init.normals(cfg.n);
      const Eigen::VectorXd z0 = init.normals(cfg.n);
      traces.push_back(
          run_coupled(g, part, x0, z0, cfg.steps, cfg.tau, cfg.seed + 1 + r).trace.block_dist);
    }

    DistanceTrace avg;
    avg.block_dist = Eigen::MatrixXd::Zero(traces[0].rows(), traces[0].cols());
    for (const auto& t : traces) avg.block_dist += t;
    avg.block_dist /= static_cast<double>(traces.size());
    avg.l2 = avg.block_dist.rowwise().norm();
    write_trace_csv(cfg.out + "_trace.csv", avg);

    const ContractionFit fit = fit_contraction(traces, margin, cfg.tau);
    const json j{{"rate_hat", fit.rate_hat},
                 {"r2", fit.r2},
                 {"lambda_h", fit.lambda_h},
                 {"tau", fit.tau},
                 {"delta_hat", fit.delta_hat},
                 {"predicted_rate_delta0", fit.predicted_rate_delta0},
                 {"k0", fit.k0},
                 {"k1", fit.k1},
                 {"replicas", fit.replicas},
                 {"window_truncated", fit.window_truncated},
                 {"config", config_json(cfg)}};
    write_text_atomic(cfg.out + "_fit.json", j.dump(2) + "\n");
    return 0;
  });
}

int cmd_sweep_tau(const ExperimentConfig& cfg, const std::vector<double>& taus) {
  return guarded([&] {
    if (taus.empty()) throw std::invalid_argument("tau list must not be empty");
    for (const double t : taus)
      if (!(t > 0.0)) throw std::invalid_argument("every tau must be positive");
    ExperimentConfig probe = cfg;
    probe.tau = taus.front();
    validate_config(probe);

    std::string csv = "tau,acceptance,iact\n";
    for (const double t : taus) {
      ExperimentConfig run_cfg = cfg;
      run_cfg.tau = t;
      const SampleSummary s = run_sample_experiment(run_cfg);
      csv += format_double(t) + "," + format_double(s.accept_rate) + "," +
             format_double(s.iact_mean) + "\n";
    }
    write_text_atomic(cfg.out + "_sweep.csv", csv);
    return 0;
  });
}

int cmd_iact(const std::string& in_csv, int col, long burnin, const std::string& out_json) {
  return guarded([&] {
    if (out_json.empty()) throw std::invalid_argument("output path must not be empty");
    if (!std::filesystem::exists(in_csv))
      throw std::invalid_argument("no such chain file: " + in_csv);
    const ChainCsv chain = read_chain_csv(in_csv);
    const long rows = chain.samples.rows();
    if (burnin < 0 || burnin >= rows - 1)
      throw std::invalid_argument("burnin must leave at least two states");
    if (col >= static_cast<int>(chain.samples.cols()))
      throw std::invalid_argument("column index out of range");

    const Eigen::MatrixXd kept =
        chain.samples.bottomRows(rows - burnin);
    json j{{"in", in_csv}, {"n_rows", rows}, {"burnin", burnin}, {"col", col}};
    if (col >= 0) {
      const IactEstimate e = iact(kept.col(col));
      j["iact"] = e.iact;
      j["window"] = e.window;
      j["truncated"] = e.truncated;
      j["ess"] = ess(static_cast<double>(kept.rows()), e.iact);
    } else {
      const GridIact gi = grid_iact(kept);
      j["iact"] = gi.mean;
      j["iact_max"] = gi.max;
      j["n_cols"] = gi.n_cols;
      j["ess"] = ess(static_cast<double>(kept.rows()), gi.mean);
    }
    write_text_atomic(out_json, j.dump(2) + "\n");
    return 0;
  });
}

int cmd_map(const ExperimentConfig& cfg) {
  return guarded([&] {
    if (cfg.problem != "cox" && cfg.problem != "pde")
      throw std::invalid_argument("map requires problem cox or pde");
    if (cfg.problem == "cox" && cfg.side < 2)
      throw std::invalid_argument("grid side must be at least 2");
    if (cfg.problem == "pde" && cfg.setup != 1 && cfg.setup != 2)
      throw std::invalid_argument("setup must be 1 or 2");
    if (cfg.out.empty()) throw std::invalid_argument("output path must not be empty");

    MapResult res;
    int key = 0;
    if (cfg.problem == "cox") {
      CoxModel model(cfg.side);
      model.set_counts(simulate_cox(model, cfg.data_seed).y);
      res = map_cox(model);
      key = cfg.side;
    } else {
      PdeModel model(pde_setup(cfg.setup));
      model.set_observations(simulate_pde_data(model, cfg.data_seed).y);
      res = map_pde(model);
      key = cfg.setup;
    }
    const std::string dir = cache_dir_for(cfg);
    if (res.converged) store_cached_map(dir, cfg.problem, key, cfg.data_seed, res.x_map);
    const json j{{"problem", cfg.problem},
                 {"grad_norm", res.grad_norm},
                 {"iterations", res.iterations},
                 {"converged", res.converged},
                 {"cache_file", res.converged
                                    ? (std::filesystem::path(dir) /
                                       map_cache_name(cfg.problem, key, cfg.data_seed))
                                          .string()
                                    : std::string()},
                 {"config", config_json(cfg)}};
    write_text_atomic(cfg.out + "_map.json", j.dump(2) + "\n");
    if (!res.converged) throw std::runtime_error("map search did not converge");
    return 0;
  });
}

}  // namespace mwg
