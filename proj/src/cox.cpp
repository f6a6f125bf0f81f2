#include "mwg/cox.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mwg/gmrf.hpp"
#include "mwg/io.hpp"

namespace mwg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

CoxModel::CoxModel(int side, CoxParams params) : side_(side), params_(params) {
  if (side < 1) throw std::invalid_argument("cox: side must be >= 1");
  if (params.sigma_s2 <= 0.0 || params.sigma_t2 <= 0.0 || params.ell_s <= 0.0 ||
      params.ell_t <= 0.0)
    throw std::invalid_argument("cox: covariance parameters must be positive");

  const int n = dim();
  mean_ = Eigen::VectorXd::Constant(n, params.mu);
  cov_ = sep_exp_cov_2d(side, params.sigma_s2, params.sigma_t2, params.ell_s, params.ell_t);

  // One eigendecomposition yields a mutually consistent precision and
  // inverse square root.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("cox: eigendecomposition of the covariance failed");
  const Eigen::VectorXd& lam = eig.eigenvalues();
  if (lam.minCoeff() <= 0.0)
    throw std::runtime_error("cox: covariance is not positive definite");
  const Eigen::MatrixXd& v = eig.eigenvectors();
  prec_ = v * lam.cwiseInverse().asDiagonal() * v.transpose();
  isqrt_ = v * lam.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
}

void CoxModel::set_counts(const Eigen::VectorXd& y) {
  if (y.size() != dim()) throw std::invalid_argument("cox: counts length != L^2");
  for (Eigen::Index k = 0; k < y.size(); ++k)
    if (!(y[k] >= 0.0) || std::floor(y[k]) != y[k])
      throw std::invalid_argument("cox: counts must be non-negative integers");
  y_ = y;
  has_counts_ = true;
}

const Eigen::VectorXd& CoxModel::counts() const {
  if (!has_counts_) throw std::logic_error("cox: counts not set");
  return y_;
}

double CoxModel::log_posterior(const Eigen::VectorXd& x) const {
  if (!has_counts_) throw std::logic_error("cox: counts not set");
  if (x.size() != dim()) throw std::invalid_argument("cox: state length != L^2");
  if ((x.array() > overflow_threshold).any()) return -kInf;
  const Eigen::VectorXd r = x - mean_;
  const double prior = -0.5 * (isqrt_ * r).squaredNorm();
  const double lik = (y_.array() * x.array() - x.array().exp()).sum();
  return prior + lik;
}

Eigen::VectorXd CoxModel::grad_log_posterior(const Eigen::VectorXd& x) const {
  if (!has_counts_) throw std::logic_error("cox: counts not set");
  if (x.size() != dim()) throw std::invalid_argument("cox: state length != L^2");
  return -(prec_ * (x - mean_)) + (y_ - x.array().exp().matrix());
}

long poisson_draw(double mean, RngStream& rng) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson_draw: mean must be >= 0");
  if (mean == 0.0) return 0;
  if (mean <= 60.0) {
    const double u = rng.uniform();
    double p = std::exp(-mean);
    double cum = p;
    long k = 0;
    while (u > cum && k < 10000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cum += p;
    }
    return k;
  }
  const double draw = mean + std::sqrt(mean) * rng.normal();
  return draw <= 0.0 ? 0 : static_cast<long>(std::lround(draw));
}

CoxDataset simulate_cox(const CoxModel& model, std::uint64_t seed) {
  RngStream rng(seed);
  const int n = model.dim();
  const Eigen::LLT<Eigen::MatrixXd> llt(model.covariance());
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("cox: covariance Cholesky failed");

  CoxDataset d;
  d.seed = seed;
  d.x_true = model.mean() + llt.matrixL() * rng.normals(n);
  if ((d.x_true.array() > CoxModel::overflow_threshold).any())
    throw std::runtime_error("cox: simulated field exceeds the exp overflow guard");
  d.y.resize(n);
  for (int k = 0; k < n; ++k)
    d.y[k] = static_cast<double>(poisson_draw(std::exp(d.x_true[k]), rng));
  return d;
}

Preconditioner mmala_preconditioner(const CoxModel& model) {
  Eigen::MatrixXd m = model.precision();
  m.diagonal() +=
      (model.params().mu + model.covariance().diagonal().array()).exp().matrix();
  return Preconditioner::from_matrix(m);
}

Preconditioner mmala_proposal_preconditioner(const CoxModel& model) {
  const Preconditioner metric = mmala_preconditioner(model);
  const int n = model.dim();
  Eigen::MatrixXd inv =
      Eigen::LLT<Eigen::MatrixXd>(metric.M).solve(Eigen::MatrixXd::Identity(n, n));
  inv = 0.5 * (inv + inv.transpose()).eval();
  return Preconditioner::from_matrix(inv);
}

CoxTarget::CoxTarget(const CoxModel& model) : model_(model) {
  if (!model.has_counts()) throw std::logic_error("cox: target requires counts");
}

double CoxTarget::log_density(const Eigen::VectorXd& x) const {
  return model_.log_posterior(x);
}

Eigen::VectorXd CoxTarget::grad(const Eigen::VectorXd& x) const {
  return model_.grad_log_posterior(x);
}

void CoxTarget::log_density_and_grad(const Eigen::VectorXd& x, double& logp,
                                     Eigen::VectorXd& g) const {
  logp = model_.log_posterior(x);
  g = model_.grad_log_posterior(x);
}

void CoxTarget::block_update(const Eigen::VectorXd& x, double logp_x,
                             const Eigen::VectorXd& grad_x, const std::vector<int>& idx,
                             const Eigen::VectorXd& delta, const Eigen::VectorXd& x_new,
                             double& logp_new, Eigen::VectorXd& grad_new) const {
  const Eigen::VectorXd& y = model_.counts();
  for (const int k : idx) {
    if (x_new[k] > CoxModel::overflow_threshold) {
      logp_new = -kInf;
      grad_new = grad_x;  // placeholder, never consumed on rejection
      return;
    }
  }

  const Eigen::MatrixXd& p = model_.precision();
  const int q = static_cast<int>(idx.size());

  // Prior is Gaussian: the change in its quadratic form follows from the
  // cached gradient restricted to the moved coordinates.
  double dlin = 0.0;
  for (int a = 0; a < q; ++a) {
    const int k = idx[a];
    const double prior_grad_k = grad_x[k] - (y[k] - std::exp(x[k]));
    dlin += prior_grad_k * delta[a];
  }
  double dquad = 0.0;
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) dquad += delta[a] * p(idx[a], idx[b]) * delta[b];

  // Poisson terms are local to the moved pixels.
  double dlik = 0.0;
  for (int a = 0; a < q; ++a) {
    const int k = idx[a];
    dlik += y[k] * delta[a] - (std::exp(x_new[k]) - std::exp(x[k]));
  }
  logp_new = logp_x + dlin - 0.5 * dquad + dlik;

  grad_new = grad_x;
  for (int a = 0; a < q; ++a) grad_new.noalias() -= p.col(idx[a]) * delta[a];
  for (int a = 0; a < q; ++a) {
    const int k = idx[a];
    grad_new[k] -= std::exp(x_new[k]) - std::exp(x[k]);
  }
}

void write_cox_dataset_csv(const std::string& path, const CoxDataset& d, int side) {
  if (d.x_true.size() != static_cast<Eigen::Index>(side) * side || d.y.size() != d.x_true.size())
    throw std::invalid_argument("cox: dataset size does not match side");
  std::string out = "i,j,x_true,y\n";
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) {
      const int k = i + side * j;
      out += std::to_string(i) + ',' + std::to_string(j) + ',' + format_double(d.x_true[k]) +
             ',' + std::to_string(static_cast<long long>(d.y[k])) + '\n';
    }
  out += "#seed=" + std::to_string(d.seed) + '\n';
  write_text_atomic(path, out);
}

CoxDataset read_cox_dataset_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != "i,j,x_true,y")
    throw std::runtime_error("cox: expected 'i,j,x_true,y' header in " + path);

  std::vector<int> is, js;
  std::vector<double> xs, ys;
  CoxDataset d;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("#seed=", 0) == 0) {
      d.seed = std::stoull(line.substr(6));
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw std::runtime_error("cox: malformed dataset row in " + path);
    is.push_back(std::stoi(cells[0]));
    js.push_back(std::stoi(cells[1]));
    xs.push_back(std::stod(cells[2]));
    ys.push_back(std::stod(cells[3]));
  }
  const int n = static_cast<int>(xs.size());
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (side * side != n) throw std::runtime_error("cox: dataset is not a square grid: " + path);
  d.x_true.resize(n);
  d.y.resize(n);
  for (int r = 0; r < n; ++r) {
    const int k = is[r] + side * js[r];
    if (k < 0 || k >= n) throw std::runtime_error("cox: pixel index out of range in " + path);
    d.x_true[k] = xs[r];
    d.y[k] = ys[r];
  }
  return d;
}

}  // namespace mwg
