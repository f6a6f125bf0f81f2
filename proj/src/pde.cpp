#include "mwg/pde.hpp"

#include <cmath>
#include <stdexcept>

#include "mwg/gmrf.hpp"
#include "mwg/rng.hpp"

namespace mwg {

namespace {

// Element stiffness of a bilinear quadrilateral on a square, independent of
// the mesh width; corners ordered (0,0), (1,0), (1,1), (0,1).
const Eigen::Matrix4d& local_stiffness() {
  static const Eigen::Matrix4d s = [] {
    Eigen::Matrix4d m;
    m << 4, -1, -2, -1,  //
        -1, 4, -1, -2,   //
        -2, -1, 4, -1,   //
        -1, -2, -1, 4;
    return Eigen::Matrix4d(m / 6.0);
  }();
  return s;
}

}  // namespace

KlBasis kl_truncate(const Eigen::MatrixXd& b, double fraction) {
  if (b.rows() != b.cols()) throw std::invalid_argument("kl_truncate: matrix not square");
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("kl_truncate: fraction must be in (0, 1]");
  const Eigen::Index n = b.rows();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("kl_truncate: eigendecomposition failed");

  // ascending from the solver; view in descending order
  const Eigen::VectorXd& lam_asc = eig.eigenvalues();
  const double lam_max = lam_asc[n - 1];
  if (!(lam_max > 0.0)) throw std::runtime_error("kl_truncate: matrix has no positive spectrum");
  const double floor = 1e-12 * lam_max;

  double total = 0.0;
  Eigen::Index usable = 0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (lam_asc[i] <= floor) break;
    total += lam_asc[i];
    ++usable;
  }

  double cum = 0.0;
  Eigen::Index keep = 0;
  for (Eigen::Index r = 0; r < usable; ++r) {
    cum += lam_asc[n - 1 - r];
    keep = r + 1;
    if (cum >= fraction * total) break;
  }

  KlBasis out;
  out.n_modes = static_cast<int>(keep);
  out.u.resize(n, keep);
  out.lam.resize(keep);
  for (Eigen::Index r = 0; r < keep; ++r) {
    out.u.col(r) = eig.eigenvectors().col(n - 1 - r);
    out.lam[r] = lam_asc[n - 1 - r];
  }
  return out;
}

KlBasis kl_fixed(const Eigen::MatrixXd& b, int n_modes) {
  if (n_modes < 1 || n_modes > b.rows())
    throw std::invalid_argument("kl_fixed: mode count out of range");
  const KlBasis full = kl_truncate(b, 1.0);
  if (full.n_modes < n_modes)
    throw std::runtime_error("kl_fixed: requested modes exceed the positive spectrum");
  KlBasis out;
  out.n_modes = n_modes;
  out.u = full.u.leftCols(n_modes);
  out.lam = full.lam.head(n_modes);
  return out;
}

PdeSetup pde_setup(int which) {
  if (which == 1) return PdeSetup{0.4, 0.8, 30};
  if (which == 2) return PdeSetup{0.2, 0.1, 136};
  throw std::invalid_argument("pde_setup: setup must be 1 or 2");
}

PdeModel::PdeModel(const PdeSetup& setup) : setup_(setup) {
  const int n = n_interior();
  const double h = 1.0 / (side_ + 1);

  std::vector<std::pair<double, double>> pts;
  pts.reserve(n);
  for (int j = 0; j < side_; ++j)
    for (int i = 0; i < side_; ++i) pts.emplace_back((i + 1) * h, (j + 1) * h);
  prior_cov_ = sq_exp_cov_2d(pts, setup.ell_s, setup.ell_t);
  kl_ = kl_fixed(prior_cov_, setup.n_theta);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior_cov_);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("pde: prior eigendecomposition failed");
  prior_sqrt_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  // unit loads at the interior nodes nearest the four source positions
  load_ = Eigen::VectorXd::Zero(n);
  const double sources[4][2] = {{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
  for (const auto& s : sources) {
    const int gi = static_cast<int>(std::lround(s[0] / h));
    const int gj = static_cast<int>(std::lround(s[1] / h));
    load_[(gi - 1) + side_ * (gj - 1)] += 1.0;
  }

  obs_idx_.reserve(n / 2);
  for (int k = 0; k < n; k += 2) obs_idx_.push_back(k);

  // element table over the (side+1)^2 cells; corner c of cell (ei, ej) sits at
  // global node (ei + dc_i, ej + dc_j), interior iff both coordinates in [1, side]
  const int cells = side_ + 1;
  const int di[4] = {0, 1, 1, 0};
  const int dj[4] = {0, 0, 1, 1};
  elements_.reserve(cells * cells);
  for (int ej = 0; ej < cells; ++ej)
    for (int ei = 0; ei < cells; ++ei) {
      Element e;
      for (int c = 0; c < 4; ++c) {
        const int gi = ei + di[c], gj = ej + dj[c];
        const bool interior = gi >= 1 && gi <= side_ && gj >= 1 && gj <= side_;
        e.corners[c] = interior ? (gi - 1) + side_ * (gj - 1) : -1;
        if (interior) ++e.n_interior;
      }
      elements_.push_back(e);
    }
}

Eigen::MatrixXd PdeModel::obs_matrix() const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_obs(), n_interior());
  for (int r = 0; r < n_obs(); ++r) h(r, obs_idx_[r]) = 1.0;
  return h;
}

void PdeModel::set_noise_var(double v) {
  if (!(v > 0.0)) throw std::invalid_argument("pde: noise variance must be positive");
  noise_var_ = v;
}

void PdeModel::set_observations(const Eigen::VectorXd& y) {
  if (y.size() != n_obs()) throw std::invalid_argument("pde: observation length != 128");
  y_ = y;
  has_obs_ = true;
}

const Eigen::VectorXd& PdeModel::observations() const {
  if (!has_obs_) throw std::logic_error("pde: observations not set");
  return y_;
}

Eigen::VectorXd PdeModel::theta_to_k(const Eigen::VectorXd& theta) const {
  if (theta.size() != kl_.n_modes) throw std::invalid_argument("pde: theta length mismatch");
  return kl_.u * kl_.lam.cwiseSqrt().cwiseProduct(theta);
}

Eigen::VectorXd PdeModel::k_to_theta(const Eigen::VectorXd& k) const {
  if (k.size() != n_interior()) throw std::invalid_argument("pde: field length mismatch");
  return kl_.lam.cwiseSqrt().cwiseInverse().cwiseProduct(kl_.u.transpose() * k);
}

Eigen::MatrixXd PdeModel::assemble(const Eigen::VectorXd& k) const {
  if (k.size() != n_interior()) throw std::invalid_argument("pde: field length mismatch");
  if (!k.allFinite()) throw std::invalid_argument("pde: field must be finite");
  const Eigen::Matrix4d& s = local_stiffness();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_interior(), n_interior());
  for (const Element& e : elements_) {
    if (e.n_interior == 0) continue;
    double kbar = 0.0;
    for (int c = 0; c < 4; ++c)
      if (e.corners[c] >= 0) kbar += k[e.corners[c]];
    const double kappa = std::exp(kbar / e.n_interior);
    for (int a_loc = 0; a_loc < 4; ++a_loc) {
      const int ia = e.corners[a_loc];
      if (ia < 0) continue;
      for (int b_loc = 0; b_loc < 4; ++b_loc) {
        const int ib = e.corners[b_loc];
        if (ib < 0) continue;
        a(ia, ib) += kappa * s(a_loc, b_loc);
      }
    }
  }
  return a;
}

Eigen::VectorXd PdeModel::solve(const Eigen::VectorXd& k) const {
  const Eigen::MatrixXd a = assemble(k);
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw std::runtime_error("pde: stiffness factorization failed");
  return llt.solve(load_);
}

Eigen::VectorXd PdeModel::observe(const Eigen::VectorXd& u) const {
  if (u.size() != n_interior()) throw std::invalid_argument("pde: state length mismatch");
  Eigen::VectorXd out(n_obs());
  for (int r = 0; r < n_obs(); ++r) out[r] = u[obs_idx_[r]];
  return out;
}

double PdeModel::log_likelihood_theta(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd u = solve(theta_to_k(theta));
  const Eigen::VectorXd resid = observe(u) - observations();
  return -0.5 * resid.squaredNorm() / noise_var_;
}

double PdeModel::log_posterior_theta(const Eigen::VectorXd& theta) const {
  return -0.5 * theta.squaredNorm() + log_likelihood_theta(theta);
}

Eigen::VectorXd PdeModel::grad_k_misfit(const Eigen::VectorXd& k, const Eigen::MatrixXd& a,
                                        const Eigen::LLT<Eigen::MatrixXd>& llt,
                                        const Eigen::VectorXd& u) const {
  (void)a;
  // adjoint solve against the misfit residual; the factorization is reused
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_interior());
  const Eigen::VectorXd resid = observe(u) - observations();
  for (int r = 0; r < n_obs(); ++r) rhs[obs_idx_[r]] += resid[r] / noise_var_;
  const Eigen::VectorXd lambda = llt.solve(rhs);

  // d misfit / d k_c = sum over elements containing c of
  //   (lambda_e^T S u_e) * kappa_e / n_interior(e)
  const Eigen::Matrix4d& s = local_stiffness();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_interior());
  for (const Element& e : elements_) {
    if (e.n_interior == 0) continue;
    double kbar = 0.0;
    for (int c = 0; c < 4; ++c)
      if (e.corners[c] >= 0) kbar += k[e.corners[c]];
    const double kappa = std::exp(kbar / e.n_interior);

    Eigen::Vector4d ue = Eigen::Vector4d::Zero(), le = Eigen::Vector4d::Zero();
    for (int c = 0; c < 4; ++c)
      if (e.corners[c] >= 0) {
        ue[c] = u[e.corners[c]];
        le[c] = lambda[e.corners[c]];
      }
    const double sens = le.dot(s * ue) * kappa / e.n_interior;
    for (int c = 0; c < 4; ++c)
      if (e.corners[c] >= 0) grad[e.corners[c]] += sens;
  }
  return grad;
}

void PdeModel::log_posterior_and_grad_theta(const Eigen::VectorXd& theta, double& logp,
                                            Eigen::VectorXd& grad) const {
  const Eigen::VectorXd k = theta_to_k(theta);
  const Eigen::MatrixXd a = assemble(k);
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw std::runtime_error("pde: stiffness factorization failed");
  const Eigen::VectorXd u = llt.solve(load_);

  const Eigen::VectorXd resid = observe(u) - observations();
  logp = -0.5 * theta.squaredNorm() - 0.5 * resid.squaredNorm() / noise_var_;

  const Eigen::VectorXd gk = grad_k_misfit(k, a, llt, u);
  grad = -theta + kl_.lam.cwiseSqrt().cwiseProduct(kl_.u.transpose() * gk);
}

Eigen::VectorXd PdeModel::grad_log_posterior_theta(const Eigen::VectorXd& theta) const {
  double logp;
  Eigen::VectorXd grad;
  log_posterior_and_grad_theta(theta, logp, grad);
  return grad;
}

PdeDataset simulate_pde_data(const PdeModel& model, std::uint64_t seed) {
  RngStream rng(seed);
  const int n = model.n_interior();

  PdeDataset d;
  d.seed = seed;
  d.k_true = model.prior_sqrt() * rng.normals(n);
  const Eigen::VectorXd clean = model.observe(model.solve(d.k_true));
  d.y = clean + std::sqrt(model.noise_var()) * rng.normals(model.n_obs());
  return d;
}

PdeTarget::PdeTarget(const PdeModel& model) : model_(model) {
  if (!model.has_observations()) throw std::logic_error("pde: target requires observations");
}

// Proposals far in the tails can overflow exp(k) and break the stiffness
// factorization; the chain treats those states as having zero density.
double PdeTarget::log_density(const Eigen::VectorXd& x) const {
  try {
    return model_.log_posterior_theta(x);
  } catch (const std::runtime_error&) {
    return -std::numeric_limits<double>::infinity();
  }
}

Eigen::VectorXd PdeTarget::grad(const Eigen::VectorXd& x) const {
  try {
    return model_.grad_log_posterior_theta(x);
  } catch (const std::runtime_error&) {
    return Eigen::VectorXd::Zero(x.size());
  }
}

void PdeTarget::log_density_and_grad(const Eigen::VectorXd& x, double& logp,
                                     Eigen::VectorXd& g) const {
  try {
    model_.log_posterior_and_grad_theta(x, logp, g);
  } catch (const std::runtime_error&) {
    logp = -std::numeric_limits<double>::infinity();
    g = Eigen::VectorXd::Zero(x.size());
  }
}

}  // namespace mwg
