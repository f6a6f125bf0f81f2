#include "mwg/concavity.hpp"

#include <stdexcept>
#include <string>

#include <Eigen/SVD>

namespace mwg {

HMatrix build_h_from_precision(const Eigen::MatrixXd& P, const BlockPartition& part) {
  if (P.rows() != part.n || P.cols() != part.n)
    throw std::invalid_argument("build_h_from_precision: matrix is " +
                                std::to_string(P.rows()) + "x" + std::to_string(P.cols()) +
                                ", partition expects n=" + std::to_string(part.n));
  const int m = part.num_blocks();

  auto sub = [&](int i, int j) {
    const auto& bi = part.blocks[i];
    const auto& bj = part.blocks[j];
    Eigen::MatrixXd s(bi.size(), bj.size());
    for (std::size_t a = 0; a < bi.size(); ++a)
      for (std::size_t b = 0; b < bj.size(); ++b) s(a, b) = P(bi[a], bj[b]);
    return s;
  };

  HMatrix out;
  out.H = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    const Eigen::MatrixXd d = sub(i, i);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (d + d.transpose()),
                                                      Eigen::EigenvaluesOnly);
    out.H(i, i) = -es.eigenvalues().minCoeff();
    for (int j = i + 1; j < m; ++j) {
      const Eigen::MatrixXd o = sub(i, j);
      const double norm = Eigen::JacobiSVD<Eigen::MatrixXd>(o).singularValues()(0);
      out.H(i, j) = norm;
      out.H(j, i) = norm;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-out.H, Eigen::EigenvaluesOnly);
  out.margin = es.eigenvalues().minCoeff();
  out.h_bound = out.H.cwiseAbs().maxCoeff();
  return out;
}

ConcavityCheck check_blockwise_logconcavity(const HMatrix& h) {
  return ConcavityCheck{h.margin > 0.0, h.margin};
}

}  // namespace mwg
