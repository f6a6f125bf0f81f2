#pragma once

#include <Eigen/Dense>

#include "mwg/partition.hpp"

namespace mwg {

// Block-level curvature bound matrix for a quadratic log-density with
// precision P: H(i,i) = -lambda_min(P_ii), H(i,j) = ||P_ij||_2. The margin
// lambda_min(-H) is positive exactly when the target is block-wise log-concave
// with this bound.
struct HMatrix {
  Eigen::MatrixXd H;
  double margin = 0.0;   // lambda_min(-H)
  double h_bound = 0.0;  // max |H(i,j)|
};

// Builds H from the supplied matrix verbatim; the caller chooses any scaling
// convention (P vs 2P) before the call.
HMatrix build_h_from_precision(const Eigen::MatrixXd& P, const BlockPartition& part);

struct ConcavityCheck {
  bool concave = false;
  double margin = 0.0;
};

ConcavityCheck check_blockwise_logconcavity(const HMatrix& h);

}  // namespace mwg
