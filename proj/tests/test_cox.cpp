#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "mwg/cox.hpp"
#include "mwg/gmrf.hpp"
#include "mwg/io.hpp"
#include "mwg/partition.hpp"
#include "mwg/rng.hpp"
#include "mwg/samplers.hpp"

using namespace mwg;

namespace {

CoxModel model_with_counts(int side, std::uint64_t seed) {
  CoxModel m(side);
  m.set_counts(simulate_cox(m, seed).y);
  return m;
}

}  // namespace

TEST_CASE("simulation is deterministic per seed") {
  const CoxModel m(8);
  const CoxDataset a = simulate_cox(m, 42);
  const CoxDataset b = simulate_cox(m, 42);
  CHECK((a.x_true - b.x_true).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  const CoxDataset c = simulate_cox(m, 43);
  CHECK((a.x_true - c.x_true).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("simulated fields have the prior mean and pixel variance") {
  const CoxModel m(16);
  const int n_seeds = 200;
  const int pixel = 37;
  Eigen::VectorXd spatial_mean(n_seeds), pix(n_seeds);
  for (int s = 0; s < n_seeds; ++s) {
    const CoxDataset d = simulate_cox(m, 1000 + s);
    spatial_mean[s] = d.x_true.mean();
    pix[s] = d.x_true[pixel];
  }
  const double mbar = spatial_mean.mean();
  const double se_mean =
      std::sqrt((spatial_mean.array() - mbar).square().sum() / (n_seeds - 1)) /
      std::sqrt(static_cast<double>(n_seeds));
  CHECK(std::abs(mbar - 4.0) < 3.0 * se_mean);

  const double pbar = pix.mean();
  const double pvar = (pix.array() - pbar).square().sum() / (n_seeds - 1);
  // var estimate of a Gaussian pixel: sd(s^2) ~ sigma^2 sqrt(2/(n-1))
  const double se_var = 4.0 * std::sqrt(2.0 / (n_seeds - 1));
  CHECK(std::abs(pvar - 4.0) < 3.0 * se_var);
}

TEST_CASE("poisson draws are exact for small means and gaussian for large") {
  RngStream rng(7);
  CHECK(poisson_draw(0.0, rng) == 0);
  CHECK_THROWS_AS(poisson_draw(-1.0, rng), std::invalid_argument);

  RngStream r1(9), r2(9);
  for (int i = 0; i < 50; ++i) CHECK(poisson_draw(7.0, r1) == poisson_draw(7.0, r2));

  const int n = 30000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(poisson_draw(7.0, rng));
    sum += k;
    sum2 += k * k;
  }
  const double mean = sum / n, var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - 7.0) < 3.0 * std::sqrt(7.0 / n));
  CHECK(std::abs(var - 7.0) < 0.35);

  const int big = 5000;
  double bsum = 0.0;
  for (int i = 0; i < big; ++i) bsum += static_cast<double>(poisson_draw(1000.0, rng));
  CHECK(std::abs(bsum / big - 1000.0) < 3.0 * std::sqrt(1000.0 / big));
}

TEST_CASE("log posterior matches the closed form at the prior mean") {
  CoxModel m(16);
  m.set_counts(Eigen::VectorXd::Zero(m.dim()));
  const double lp = m.log_posterior(m.mean());
  const double expect = -256.0 * std::exp(4.0);
  CHECK(lp == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("log posterior differences match a dense brute-force evaluation") {
  const CoxModel m = model_with_counts(8, 5);
  const Eigen::MatrixXd b = sep_exp_cov_2d(8, 2.0, 2.0, 2.0, 4.0);
  const Eigen::LLT<Eigen::MatrixXd> llt(b);
  const Eigen::VectorXd& y = m.counts();

  auto brute = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd r = x - m.mean();
    return -0.5 * r.dot(llt.solve(r)) + (y.array() * x.array() - x.array().exp()).sum();
  };

  RngStream rng(6);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd x1 = m.mean() + rng.normals(m.dim());
    const Eigen::VectorXd x2 = m.mean() + rng.normals(m.dim());
    const double got = m.log_posterior(x1) - m.log_posterior(x2);
    const double expect = brute(x1) - brute(x2);
    CHECK(got == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("adding a constant to the field is not an invariance") {
  const CoxModel m = model_with_counts(8, 5);
  RngStream rng(8);
  const Eigen::VectorXd x1 = m.mean() + rng.normals(m.dim());
  const Eigen::VectorXd x2 = m.mean() + rng.normals(m.dim());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.dim());
  const double shift1 = m.log_posterior(x1 + 0.1 * ones) - m.log_posterior(x1);
  const double shift2 = m.log_posterior(x2 + 0.1 * ones) - m.log_posterior(x2);
  CHECK(std::abs(shift1 - shift2) > 1e-6);
}

TEST_CASE("gradient vanishes at the stationary point") {
  CoxParams p;
  p.mu = std::log(55.0);
  CoxModel m(8, p);
  m.set_counts(Eigen::VectorXd::Constant(m.dim(), 55.0));
  const Eigen::VectorXd g = m.grad_log_posterior(m.mean());
  CHECK(g.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("analytic gradients match finite differences on random states") {
  CoxModel m(16);
  m.set_counts(simulate_cox(m, 11).y);
  const CoxTarget target(m);
  RngStream rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd x = m.mean() + 0.5 * rng.normals(m.dim());
    // log-posterior magnitude ~ L^2 e^mu, so differences below 1e-6 are
    // round-off; the relative test covers every larger coordinate
    const auto res = fd_grad_check(target, x, 4e-5, 1e-6, 1e-6);
    CHECK(res.pass);
  }
}

TEST_CASE("prior gradient change along a unit coordinate is a precision column") {
  CoxModel m(8);
  m.set_counts(Eigen::VectorXd::Zero(m.dim()));
  const int k = 21;
  Eigen::VectorXd e_k = Eigen::VectorXd::Zero(m.dim());
  e_k[k] = 1.0;
  Eigen::VectorXd diff = m.grad_log_posterior(m.mean() + e_k) - m.grad_log_posterior(m.mean());
  // remove the local Poisson contribution to isolate the prior term
  diff[k] += std::exp(m.params().mu + 1.0) - std::exp(m.params().mu);

  const Eigen::MatrixXd b = sep_exp_cov_2d(8, 2.0, 2.0, 2.0, 4.0);
  const Eigen::VectorXd col = Eigen::LLT<Eigen::MatrixXd>(b).solve(e_k);
  CHECK((diff + col).cwiseAbs().maxCoeff() < 1e-8 * col.cwiseAbs().maxCoeff());
}

TEST_CASE("mmala preconditioner is the precision plus the intensity diagonal") {
  const CoxModel m(16);
  const Preconditioner pre = mmala_preconditioner(m);
  Eigen::MatrixXd diff = pre.M - m.precision();
  const double e8 = std::exp(8.0);
  for (int i = 0; i < m.dim(); ++i) {
    CHECK(diff(i, i) == doctest::Approx(e8).epsilon(1e-14));
    diff(i, i) = 0.0;
  }
  CHECK(diff.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mmala preconditioner factors at both study sizes") {
  CHECK_NOTHROW(mmala_preconditioner(CoxModel(16)));
  CHECK_NOTHROW(mmala_preconditioner(CoxModel(32)));
}

TEST_CASE("posterior hessian couples corner-adjacent tiles but nothing farther") {
  CoxModel m(16);
  m.set_counts(simulate_cox(m, 3).y);
  const CoxTarget target(m);
  const auto part = make_tiles_2d(16, 4);

  RngStream r1(21);
  const auto with_corners = probe_sparsity(target, tile_neighbors(16, 4, true), part, 2, 1e-8, r1);
  CHECK(with_corners.pass);

  RngStream r2(22);
  const auto edges_only = probe_sparsity(target, tile_neighbors(16, 4, false), part, 2, 1e-8, r2);
  CHECK_FALSE(edges_only.pass);
  CHECK(edges_only.max_violation > 0.1);
}

TEST_CASE("log posterior is concave along every coordinate") {
  CoxModel m(8);
  m.set_counts(simulate_cox(m, 17).y);
  RngStream rng(18);
  const double h = 1e-4;
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd x = m.mean() + 0.5 * rng.normals(m.dim());
    const int k = static_cast<int>(rng.uniform() * m.dim());
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const double curv =
        (m.log_posterior(xp) - 2.0 * m.log_posterior(x) + m.log_posterior(xm)) / (h * h);
    const double expect = -m.precision()(k, k) - std::exp(x[k]);
    CHECK(curv < 0.0);
    CHECK(curv == doctest::Approx(expect).epsilon(0.05));
  }
}

TEST_CASE("block updates reproduce fresh evaluations") {
  CoxModel m(8);
  m.set_counts(simulate_cox(m, 23).y);
  const CoxTarget target(m);
  const auto part = make_tiles_2d(8, 4);
  RngStream rng(24);

  const Eigen::VectorXd x = m.mean() + 0.3 * rng.normals(m.dim());
  double logp;
  Eigen::VectorXd grad;
  target.log_density_and_grad(x, logp, grad);

  for (int j = 0; j < part.num_blocks(); ++j) {
    const auto& idx = part.blocks[j];
    const Eigen::VectorXd delta = 0.2 * rng.normals(static_cast<int>(idx.size()));
    Eigen::VectorXd x_new = x;
    for (std::size_t a = 0; a < idx.size(); ++a) x_new[idx[a]] += delta[a];

    double logp_new;
    Eigen::VectorXd grad_new;
    target.block_update(x, logp, grad, idx, delta, x_new, logp_new, grad_new);

    const double logp_ref = m.log_posterior(x_new);
    const Eigen::VectorXd grad_ref = m.grad_log_posterior(x_new);
    CHECK(logp_new == doctest::Approx(logp_ref).epsilon(1e-10));
    CHECK((grad_new - grad_ref).cwiseAbs().maxCoeff() <
          1e-10 * (1.0 + grad_ref.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("block update rejects overflowing proposals with -inf") {
  CoxModel m(8);
  m.set_counts(simulate_cox(m, 29).y);
  const CoxTarget target(m);
  const std::vector<int> idx = {5};
  const Eigen::VectorXd x = m.mean();
  double logp;
  Eigen::VectorXd grad;
  target.log_density_and_grad(x, logp, grad);

  Eigen::VectorXd delta(1);
  delta << 800.0;
  Eigen::VectorXd x_new = x;
  x_new[5] += 800.0;
  double logp_new;
  Eigen::VectorXd grad_new;
  target.block_update(x, logp, grad, idx, delta, x_new, logp_new, grad_new);
  CHECK(std::isinf(logp_new));
  CHECK(logp_new < 0.0);
}

TEST_CASE("overflowing simulations and states are guarded") {
  CoxParams p;
  p.mu = 800.0;
  const CoxModel m(4, p);
  CHECK_THROWS_AS(simulate_cox(m, 1), std::runtime_error);

  CoxModel ok(4);
  ok.set_counts(Eigen::VectorXd::Zero(16));
  CHECK(std::isinf(ok.log_posterior(Eigen::VectorXd::Constant(16, 701.0))));
}

TEST_CASE("count validation and unset counts are rejected") {
  CoxModel m(4);
  CHECK_THROWS_AS(m.counts(), std::logic_error);
  CHECK_THROWS_AS(m.log_posterior(m.mean()), std::logic_error);
  CHECK_THROWS_AS((CoxTarget(m)), std::logic_error);

  Eigen::VectorXd bad = Eigen::VectorXd::Zero(16);
  bad[3] = -1.0;
  CHECK_THROWS_AS(m.set_counts(bad), std::invalid_argument);
  bad[3] = 1.5;
  CHECK_THROWS_AS(m.set_counts(bad), std::invalid_argument);
  CHECK_THROWS_AS(m.set_counts(Eigen::VectorXd::Zero(15)), std::invalid_argument);
}

TEST_CASE("dataset csv round trips") {
  const CoxModel m(8);
  const CoxDataset d = simulate_cox(m, 31);
  const std::string path = "cox_dataset_test.csv";
  write_cox_dataset_csv(path, d, 8);
  const CoxDataset back = read_cox_dataset_csv(path);
  std::remove(path.c_str());
  CHECK((back.x_true - d.x_true).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.y - d.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.seed == 31);
}

TEST_CASE("a short gibbs run moves and accepts at a healthy rate") {
  CoxModel m(8);
  m.set_counts(simulate_cox(m, 37).y);
  const CoxTarget target(m);

  const auto part = make_tiles_2d(8, 4);
  const Preconditioner pre = mmala_proposal_preconditioner(m);
  KernelSpec spec;
  spec.kind = KernelKind::mwg;
  spec.tau = 0.05;
  spec.part = &part;
  spec.precond = &pre;

  const ChainRun run = run_chain(&target, spec, m.mean(), 200, 38);
  CHECK(run.accept_rate > 0.5);
  CHECK(run.accept_rate <= 1.0);
  CHECK((run.samples.bottomRows(1).transpose() - m.mean()).norm() > 0.0);
}
