#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mwg/gmrf.hpp"
#include "mwg/pde.hpp"
#include "mwg/rng.hpp"

using namespace mwg;

namespace {

// Straight-line reimplementation of the forward pipeline: bilinear element
// stiffness from 2x2 Gauss quadrature (exact for these integrands), explicit
// interior-node bookkeeping, dense solve, explicit selector matrix.
Eigen::Matrix4d quadrature_stiffness() {
  // shape functions on the unit square, corners (0,0),(1,0),(1,1),(0,1)
  auto dndxi = [](int a, double xi, double eta) {
    (void)xi;
    switch (a) {
      case 0: return -(1.0 - eta);
      case 1: return 1.0 - eta;
      case 2: return eta;
      default: return -eta;
    }
  };
  auto dndeta = [](int a, double xi, double eta) {
    (void)eta;
    switch (a) {
      case 0: return -(1.0 - xi);
      case 1: return -xi;
      case 2: return xi;
      default: return 1.0 - xi;
    }
  };
  const double g = 0.5 / std::sqrt(3.0);
  const double pts[2] = {0.5 - g, 0.5 + g};
  Eigen::Matrix4d s = Eigen::Matrix4d::Zero();
  for (const double xi : pts)
    for (const double eta : pts)
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          s(a, b) += 0.25 * (dndxi(a, xi, eta) * dndxi(b, xi, eta) +
                             dndeta(a, xi, eta) * dndeta(b, xi, eta));
  return s;
}

Eigen::MatrixXd assemble_reference(const Eigen::VectorXd& k, int side) {
  const int n = side * side;
  const Eigen::Matrix4d s = quadrature_stiffness();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  const int di[4] = {0, 1, 1, 0};
  const int dj[4] = {0, 0, 1, 1};
  for (int ej = 0; ej <= side; ++ej)
    for (int ei = 0; ei <= side; ++ei) {
      int ids[4];
      int n_in = 0;
      double kbar = 0.0;
      for (int c = 0; c < 4; ++c) {
        const int gi = ei + di[c], gj = ej + dj[c];
        if (gi >= 1 && gi <= side && gj >= 1 && gj <= side) {
          ids[c] = (gi - 1) + side * (gj - 1);
          kbar += k[ids[c]];
          ++n_in;
        } else {
          ids[c] = -1;
        }
      }
      if (n_in == 0) continue;
      const double kappa = std::exp(kbar / n_in);
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q)
          if (ids[p] >= 0 && ids[q] >= 0) a(ids[p], ids[q]) += kappa * s(p, q);
    }
  return a;
}

}  // namespace

TEST_CASE("truncation keeps the smallest leading set reaching the variance goal") {
  const PdeModel m1(pde_setup(1));
  const KlBasis k95 = kl_truncate(m1.prior_cov(), 0.95);
  CHECK(k95.n_modes == 4);

  const PdeModel m2(pde_setup(2));
  const KlBasis k95b = kl_truncate(m2.prior_cov(), 0.95);
  CHECK(k95b.n_modes == 28);

  // minimality: one fewer mode falls short of the goal
  const double total = kl_truncate(m1.prior_cov(), 1.0).lam.sum();
  CHECK(k95.lam.sum() >= 0.95 * total);
  CHECK(k95.lam.head(k95.n_modes - 1).sum() < 0.95 * total);
}

TEST_CASE("full truncation reconstructs the covariance") {
  const PdeModel m(pde_setup(1));
  const KlBasis full = kl_truncate(m.prior_cov(), 1.0);
  const Eigen::MatrixXd recon = full.u * full.lam.asDiagonal() * full.u.transpose();
  CHECK((recon - m.prior_cov()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((full.u.transpose() * full.u - Eigen::MatrixXd::Identity(full.n_modes, full.n_modes))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  for (int r = 1; r < full.n_modes; ++r) CHECK(full.lam[r] <= full.lam[r - 1]);
  CHECK(full.lam[full.n_modes - 1] > 0.0);
}

TEST_CASE("study setups pin correlation lengths and latent dimensions") {
  const PdeSetup s1 = pde_setup(1);
  CHECK(s1.ell_s == 0.4);
  CHECK(s1.ell_t == 0.8);
  CHECK(s1.n_theta == 30);
  const PdeSetup s2 = pde_setup(2);
  CHECK(s2.ell_s == 0.2);
  CHECK(s2.ell_t == 0.1);
  CHECK(s2.n_theta == 136);
  CHECK_THROWS_AS(pde_setup(3), std::invalid_argument);

  const PdeModel m1(s1);
  CHECK(m1.n_theta() == 30);
  CHECK(m1.kl().lam[29] > 0.0);
  const PdeModel m2(s2);
  CHECK(m2.n_theta() == 136);
  CHECK(m2.kl().lam[135] > 0.0);
}

TEST_CASE("theta/field change of variables round trips") {
  const PdeModel m(pde_setup(1));
  RngStream rng(5);
  const Eigen::VectorXd theta = rng.normals(m.n_theta());
  const Eigen::VectorXd back = m.k_to_theta(m.theta_to_k(theta));
  CHECK((back - theta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("solver satisfies positivity, scaling, and residual identities") {
  const PdeModel m(pde_setup(1));
  const Eigen::VectorXd u1 = m.solve(Eigen::VectorXd::Zero(256));
  CHECK(u1.minCoeff() > 0.0);

  const Eigen::VectorXd u2 = m.solve(Eigen::VectorXd::Constant(256, std::log(2.0)));
  CHECK((u2 - 0.5 * u1).cwiseAbs().maxCoeff() < 1e-13 * u1.cwiseAbs().maxCoeff());

  RngStream rng(7);
  const Eigen::VectorXd k = 0.3 * rng.normals(256);
  const Eigen::VectorXd u = m.solve(k);
  const double resid = (m.assemble(k) * u - m.load()).norm() / m.load().norm();
  CHECK(resid < 1e-10);
}

TEST_CASE("stiffness matrices are exactly symmetric and factorable") {
  const PdeModel m(pde_setup(1));
  RngStream rng(9);
  for (int rep = 0; rep < 3; ++rep) {
    const Eigen::MatrixXd a = m.assemble(0.5 * rng.normals(256));
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(a).info() == Eigen::Success);
  }
}

TEST_CASE("assembly matches an independent quadrature-based implementation") {
  const PdeModel m(pde_setup(1));
  RngStream rng(11);
  const Eigen::VectorXd k = 0.4 * rng.normals(256);
  const Eigen::MatrixXd a = m.assemble(k);
  const Eigen::MatrixXd ref = assemble_reference(k, 16);
  CHECK((a - ref).cwiseAbs().maxCoeff() < 1e-13 * ref.cwiseAbs().maxCoeff());
}

TEST_CASE("posterior value matches a brute-force pipeline") {
  PdeModel m(pde_setup(1));
  const PdeDataset d = simulate_pde_data(m, 21);
  m.set_observations(d.y);

  RngStream rng(13);
  for (int rep = 0; rep < 3; ++rep) {
    const Eigen::VectorXd theta = 0.5 * rng.normals(m.n_theta());
    const Eigen::VectorXd k = m.theta_to_k(theta);
    const Eigen::MatrixXd a_ref = assemble_reference(k, 16);
    const Eigen::VectorXd u_ref = Eigen::LLT<Eigen::MatrixXd>(a_ref).solve(m.load());
    const Eigen::VectorXd resid = m.obs_matrix() * u_ref - d.y;
    const double expect = -0.5 * theta.squaredNorm() - 0.5 * resid.squaredNorm() / 0.01;
    const double got = m.log_posterior_theta(theta);
    CHECK(got == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("self-consistent observations zero the misfit and pin the gradient") {
  PdeModel m(pde_setup(1));
  m.set_observations(m.observe(m.solve(m.theta_to_k(Eigen::VectorXd::Zero(30)))));
  CHECK(m.log_posterior_theta(Eigen::VectorXd::Zero(30)) == 0.0);
  CHECK(m.grad_log_posterior_theta(Eigen::VectorXd::Zero(30)).cwiseAbs().maxCoeff() == 0.0);

  RngStream rng(15);
  const Eigen::VectorXd theta = 0.7 * rng.normals(30);
  PdeModel m2(pde_setup(1));
  m2.set_observations(m2.observe(m2.solve(m2.theta_to_k(theta))));
  const Eigen::VectorXd g = m2.grad_log_posterior_theta(theta);
  CHECK((g + theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("doubling the noise standard deviation quarters the misfit term") {
  PdeModel m(pde_setup(1));
  const PdeDataset d = simulate_pde_data(m, 23);
  m.set_observations(d.y);
  RngStream rng(17);
  const Eigen::VectorXd theta = 0.5 * rng.normals(m.n_theta());

  const double misfit1 = m.log_posterior_theta(theta) + 0.5 * theta.squaredNorm();
  m.set_noise_var(0.04);
  const double misfit2 = m.log_posterior_theta(theta) + 0.5 * theta.squaredNorm();
  CHECK(misfit2 == doctest::Approx(0.25 * misfit1).epsilon(1e-12));
}

TEST_CASE("adjoint gradients match finite differences in both setups") {
  for (int which : {1, 2}) {
    PdeModel m(pde_setup(which));
    const PdeDataset d = simulate_pde_data(m, 31 + which);
    m.set_observations(d.y);
    const PdeTarget target(m);

    RngStream rng(41 + which);
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::VectorXd theta = 0.5 * rng.normals(m.n_theta());
      // h balances O(h^2) truncation against cancellation in a log-density
      // of magnitude ~5e2; smaller h lets roundoff (~1e-7 absolute) dominate
      // the near-zero gradient coordinates.
      const auto res = fd_grad_check(target, theta, 1e-5, 1e-5, 1e-7);
      CHECK(res.pass);
    }
  }
}

TEST_CASE("simulation is deterministic and carries the declared noise level") {
  const PdeModel m(pde_setup(1));
  const PdeDataset a = simulate_pde_data(m, 3);
  const PdeDataset b = simulate_pde_data(m, 3);
  CHECK((a.k_true - b.k_true).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);

  const int n_seeds = 200;
  double ss = 0.0;
  long count = 0;
  for (int s = 0; s < n_seeds; ++s) {
    const PdeDataset d = simulate_pde_data(m, 100 + s);
    const Eigen::VectorXd clean = m.observe(m.solve(d.k_true));
    ss += (d.y - clean).squaredNorm();
    count += d.y.size();
  }
  const double std_hat = std::sqrt(ss / count);
  const double se = 0.1 / std::sqrt(2.0 * count);
  CHECK(std::abs(std_hat - 0.1) < 3.0 * se);
}

TEST_CASE("prior draws vary over seeds with the prior marginal variance") {
  const PdeModel m(pde_setup(1));
  const int node = 120, n_seeds = 200;
  Eigen::VectorXd v(n_seeds);
  for (int s = 0; s < n_seeds; ++s) v[s] = simulate_pde_data(m, 500 + s).k_true[node];
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / (n_seeds - 1);
  const double truth = m.prior_cov()(node, node);
  CHECK(std::abs(var - truth) < 3.0 * truth * std::sqrt(2.0 / (n_seeds - 1)));
}

TEST_CASE("observation selector picks every other component") {
  const PdeModel m(pde_setup(1));
  const Eigen::MatrixXd h = m.obs_matrix();
  CHECK(h.rows() == 128);
  CHECK(h.cols() == 256);
  for (int r = 0; r < 128; ++r) {
    CHECK(h.row(r).sum() == 1.0);
    CHECK(h.row(r).cwiseAbs().sum() == 1.0);
    CHECK(h(r, 2 * r) == 1.0);
  }
  RngStream rng(51);
  const Eigen::VectorXd u = rng.normals(256);
  CHECK(((h * u) - m.observe(u)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("loads sit at the four interior nodes nearest the source points") {
  const PdeModel m(pde_setup(1));
  const Eigen::VectorXd& g = m.load();
  CHECK(g.sum() == 4.0);
  for (const int idx : {51, 60, 195, 204}) CHECK(g[idx] == 1.0);
  CHECK(g.cwiseAbs().sum() == 4.0);
}

TEST_CASE("invalid inputs are rejected") {
  PdeModel m(pde_setup(1));
  CHECK_THROWS_AS(m.observations(), std::logic_error);
  CHECK_THROWS_AS((PdeTarget(m)), std::logic_error);
  CHECK_THROWS_AS(m.set_observations(Eigen::VectorXd::Zero(5)), std::invalid_argument);
  CHECK_THROWS_AS(m.set_noise_var(0.0), std::invalid_argument);
  CHECK_THROWS_AS(m.theta_to_k(Eigen::VectorXd::Zero(31)), std::invalid_argument);
  CHECK_THROWS_AS(m.k_to_theta(Eigen::VectorXd::Zero(11)), std::invalid_argument);
  CHECK_THROWS_AS(m.solve(Eigen::VectorXd::Constant(
                      256, std::numeric_limits<double>::quiet_NaN())),
                  std::invalid_argument);
  CHECK_THROWS_AS(kl_truncate(Eigen::MatrixXd::Zero(3, 4), 0.9), std::invalid_argument);
  CHECK_THROWS_AS(kl_truncate(Eigen::MatrixXd::Identity(3, 3), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(kl_fixed(Eigen::MatrixXd::Identity(3, 3), 4), std::invalid_argument);
}
