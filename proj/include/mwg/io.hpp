#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mwg/coupling.hpp"

namespace mwg {

// All text output goes through an atomic temp-file-plus-rename so partial
// files are never observed. Floats carry 17 significant digits.

std::string format_double(double v);

void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

// Square-matrix CSV: first line "n=<rows>", then one comma-separated row per line.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

// Vector CSV: first line "n=<len>", then one value per line.
void write_vector_csv(const std::string& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector_csv(const std::string& path);

// Chain CSV: header row "x0,x1,...", one row per retained state, then
// commented summary lines "#acc_rate=<v>" and "#n_evals=<v>".
struct ChainCsv {
  Eigen::MatrixXd samples;
  std::optional<double> acc_rate;
  std::optional<long long> n_evals;
};
void write_chain_csv(const std::string& path, const Eigen::MatrixXd& samples,
                     double acc_rate, long long n_evals);
ChainCsv read_chain_csv(const std::string& path);

// Coupling-distance trace CSV: columns sweep, block_1_dist..block_m_dist, l2_norm.
void write_trace_csv(const std::string& path, const DistanceTrace& trace);

}  // namespace mwg
