#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mwg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Block MALA-within-Gibbs sampling toolkit"};
  app.require_subcommand(1);
  app.fallthrough(true);  // experiment options live on the root, usable after a subcommand

  mwg::ExperimentConfig cfg;
  bool raw_table = false;
  std::vector<double> taus;
  std::string iact_in, iact_out;
  int iact_col = -1;
  long iact_burnin = 0;

  // Shared experiment options; a TOML-style config file (--config) may supply
  // any of them, with explicit command-line flags winning.
  app.add_option("--problem", cfg.problem, "cox | pde | gauss1d");
  app.add_option("--sampler", cfg.sampler, "mala | mwg | mmala | pcn");
  app.add_option("--side", cfg.side, "grid side L (cox)");
  app.add_option("--setup", cfg.setup, "study setup id (pde)");
  app.add_option("--n", cfg.n, "dimension (gauss1d)");
  app.add_option("--ell", cfg.ell, "correlation length (gauss1d)");
  app.add_option("--block", cfg.block, "block size q / tile side d; 0 = one block");
  app.add_option("--tau", cfg.tau, "step size (beta for pcn)");
  app.add_option("--steps", cfg.steps, "sweeps to run");
  app.add_option("--replicas", cfg.replicas, "coupled replicas (couple)");
  app.add_option("--seed", cfg.seed, "chain / replica seed");
  app.add_option("--data-seed", cfg.data_seed, "synthetic dataset seed");
  app.add_option("--thin", cfg.thin, "retain every thin-th state");
  app.add_option("--out", cfg.out, "output path prefix");
  app.add_option("--cache-dir", cfg.cache_dir, "MAP cache directory");
  app.set_config("--config", "", "read options from a config file");

  CLI::App* concavity = app.add_subcommand("concavity", "block log-concavity margin table");
  concavity->add_flag("--raw", raw_table, "apply the (ell, q) labels literally");

  CLI::App* sample = app.add_subcommand("sample", "run one chain; chain CSV + summary JSON");

  CLI::App* couple = app.add_subcommand("couple", "coupled-pair contraction experiment");

  CLI::App* sweep = app.add_subcommand("sweep-tau", "acceptance/IACT across step sizes");
  sweep->add_option("--taus", taus, "step sizes to sweep")->required();

  CLI::App* iact_cmd = app.add_subcommand("iact", "autocorrelation time of a stored chain");
  iact_cmd->add_option("--in", iact_in, "chain CSV to analyze")->required();
  iact_cmd->add_option("--col", iact_col, "column index; -1 = average over all");
  iact_cmd->add_option("--burnin", iact_burnin, "rows to drop before estimating");
  iact_cmd->add_option("--out", iact_out, "output JSON path")->required();

  CLI::App* map_cmd = app.add_subcommand("map", "posterior mode search; caches the result");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (concavity->parsed()) return mwg::cmd_concavity(cfg, raw_table);
  if (sample->parsed()) return mwg::cmd_sample(cfg);
  if (couple->parsed()) return mwg::cmd_couple(cfg);
  if (sweep->parsed()) return mwg::cmd_sweep_tau(cfg, taus);
  if (iact_cmd->parsed()) return mwg::cmd_iact(iact_in, iact_col, iact_burnin, iact_out);
  if (map_cmd->parsed()) return mwg::cmd_map(cfg);
  return 2;
}
