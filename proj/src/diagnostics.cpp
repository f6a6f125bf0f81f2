#include "mwg/diagnostics.hpp"

#include <complex>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace mwg {

Eigen::VectorXd autocovariance(const Eigen::VectorXd& series, int max_lag) {
  const int n = static_cast<int>(series.size());
  if (max_lag < 0) throw std::invalid_argument("autocovariance: max_lag must be >= 0");
  if (n < 2 * max_lag)
    throw std::invalid_argument("autocovariance: series length must be >= 2*max_lag");

  // circular convolution on a zero-padded copy gives all linear lags at once
  int len = 1;
  while (len < 2 * n) len <<= 1;
  std::vector<double> padded(len, 0.0);
  const double mean = series.mean();
  for (int i = 0; i < n; ++i) padded[i] = series[i] - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& c : freq) c = std::norm(c);
  std::vector<double> corr;
  fft.inv(corr, freq);

  Eigen::VectorXd gamma(max_lag + 1);
  for (int t = 0; t <= max_lag; ++t) gamma[t] = corr[t] / n;
  return gamma;
}

IactEstimate iact(const Eigen::VectorXd& series) {
  const int n = static_cast<int>(series.size());
  if (n < 100) throw std::invalid_argument("iact: need at least 100 samples");
  const int max_lag = n / 2;

  IactEstimate est;
  est.autocov = autocovariance(series, max_lag);
  const double g0 = est.autocov[0];
  // Round-off in the mean subtraction can leave a constant series with a
  // tiny positive g0; gate on the variance relative to the signal scale.
  const double scale2 = series.array().abs2().mean();
  if (g0 <= 0.0 || g0 <= 1e-24 * (1.0 + scale2))
    throw std::domain_error("iact: constant series, autocovariance at lag 0 vanishes");

  // smallest W with W >= 5 * tau_int(W)
  double tau_int = 1.0;
  int w = 0;
  bool found = false;
  for (int t = 1; t <= max_lag; ++t) {
    tau_int += 2.0 * est.autocov[t] / g0;
    if (static_cast<double>(t) >= 5.0 * tau_int) {
      w = t;
      found = true;
      break;
    }
  }
  if (!found) {
    w = max_lag;
    est.truncated = true;
  }
  est.window = w;
  est.iact = std::max(1.0, [&] {
    double s = 1.0;
    for (int t = 1; t <= w; ++t) s += 2.0 * est.autocov[t] / g0;
    return s;
  }());
  return est;
}

double ess(double n_samples, double iact_value) {
  if (iact_value < 1.0) throw std::invalid_argument("ess: iact must be >= 1");
  return n_samples / iact_value;
}

double cost_per_effective_sample(double iact_value, int n_blocks, double cost_per_eval) {
  if (iact_value <= 0 || n_blocks <= 0 || cost_per_eval <= 0)
    throw std::invalid_argument("cost_per_effective_sample: inputs must be positive");
  return iact_value * n_blocks * cost_per_eval;
}

GridIact grid_iact(const Eigen::MatrixXd& chain) {
  if (chain.rows() < 100) throw std::invalid_argument("grid_iact: need at least 100 rows");
  GridIact out;
  out.n_cols = static_cast<int>(chain.cols());
  out.per_coord.resize(out.n_cols);
  for (int c = 0; c < out.n_cols; ++c) out.per_coord[c] = iact(chain.col(c)).iact;
  out.mean = out.per_coord.mean();
  out.max = out.per_coord.maxCoeff();
  return out;
}

}  // namespace mwg
