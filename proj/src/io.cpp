#include "mwg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mwg {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("io: cannot open for writing: " + tmp);
    out << content;
    if (!out.flush()) throw std::runtime_error("io: write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("io: rename failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("io: bad numeric field '" + s + "' in " + path);
  }
}

long long parse_header_n(const std::string& line, const std::string& path) {
  if (line.rfind("n=", 0) != 0)
    throw std::runtime_error("io: expected 'n=<count>' header in " + path);
  try {
    return std::stoll(line.substr(2));
  } catch (const std::exception&) {
    throw std::runtime_error("io: bad 'n=' header in " + path);
  }
}

}  // namespace

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::string out = "n=" + std::to_string(m.rows()) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("io: empty file: " + path);
  const long long n = parse_header_n(line, path);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split_line(line)) row.push_back(parse_double(cell, path));
    rows.push_back(std::move(row));
  }
  if (static_cast<long long>(rows.size()) != n)
    throw std::runtime_error("io: row count mismatch in " + path);
  const Eigen::Index cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols)
      throw std::runtime_error("io: ragged rows in " + path);
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_vector_csv(const std::string& path, const Eigen::VectorXd& v) {
  std::string out = "n=" + std::to_string(v.size()) + "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += format_double(v[i]) + "\n";
  write_text_atomic(path, out);
}

Eigen::VectorXd read_vector_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("io: empty file: " + path);
  const long long n = parse_header_n(line, path);
  std::vector<double> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    vals.push_back(parse_double(line, path));
  }
  if (static_cast<long long>(vals.size()) != n)
    throw std::runtime_error("io: row count mismatch in " + path);
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

void write_chain_csv(const std::string& path, const Eigen::MatrixXd& samples,
                     double acc_rate, long long n_evals) {
  std::string out;
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    if (j > 0) out += ',';
    out += "x" + std::to_string(j);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(samples(i, j));
    }
    out += '\n';
  }
  out += "#acc_rate=" + format_double(acc_rate) + "\n";
  out += "#n_evals=" + std::to_string(n_evals) + "\n";
  write_text_atomic(path, out);
}

ChainCsv read_chain_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("io: empty file: " + path);
  const Eigen::Index cols = static_cast<Eigen::Index>(split_line(line).size());

  ChainCsv out;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("#acc_rate=", 0) == 0)
        out.acc_rate = parse_double(line.substr(10), path);
      else if (line.rfind("#n_evals=", 0) == 0)
        out.n_evals = std::stoll(line.substr(9));
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : split_line(line)) row.push_back(parse_double(cell, path));
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw std::runtime_error("io: ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  out.samples.resize(static_cast<Eigen::Index>(rows.size()), cols);
  for (Eigen::Index i = 0; i < out.samples.rows(); ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out.samples(i, j) = rows[i][j];
  return out;
}

void write_trace_csv(const std::string& path, const DistanceTrace& trace) {
  const Eigen::Index m = trace.block_dist.cols();
  std::string out = "sweep";
  for (Eigen::Index j = 0; j < m; ++j) out += ",block_" + std::to_string(j + 1) + "_dist";
  out += ",l2_norm\n";
  for (Eigen::Index k = 0; k < trace.block_dist.rows(); ++k) {
    out += std::to_string(k);
    for (Eigen::Index j = 0; j < m; ++j) out += ',' + format_double(trace.block_dist(k, j));
    out += ',' + format_double(trace.l2[k]) + "\n";
  }
  write_text_atomic(path, out);
}

}  // namespace mwg
