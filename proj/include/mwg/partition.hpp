#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mwg {

class RngStream;
class TargetDensity;

// Partition of the coordinate indices {0,...,n-1} into m ordered blocks. Block
// order is the update order in a sweep; blocks need not be contiguous.
struct BlockPartition {
  int n = 0;
  std::vector<std::vector<int>> blocks;  // indices sorted ascending within each block
  int q_max = 0;                         // largest block size

  int num_blocks() const { return static_cast<int>(blocks.size()); }
};

// Validates and finalizes an arbitrary block list (disjoint, covering, non-empty).
BlockPartition make_partition(int n, std::vector<std::vector<int>> blocks);

// m = n/q consecutive blocks [k*q, (k+1)*q). Requires q | n.
BlockPartition make_uniform_1d(int n, int q);

// Square tiles of a side x side grid under the column-stacking convention
// index = i + side*j. Requires tile | side; (side/tile)^2 blocks ordered with
// the i-direction fastest.
BlockPartition make_tiles_2d(int side, int tile);

BlockPartition single_block(int n);

// Conditional-dependence bookkeeping: sets[j] lists the block indices whose
// coordinates the block-j conditional depends on (always including j itself).
struct NeighborhoodStructure {
  std::vector<std::vector<int>> sets;  // sorted block ids
  int s_max = 0;
};

// Validates symmetry and self-membership.
NeighborhoodStructure make_neighbors(std::vector<std::vector<int>> sets);

// i in sets[j] iff the (block i, block j) sub-matrix of P has an entry larger
// than tol * max|P|.
NeighborhoodStructure neighbors_from_precision(const Eigen::MatrixXd& P,
                                               const BlockPartition& part,
                                               double tol = 1e-12);

// Tile adjacency on the (side/tile)^2 tile grid; edge-adjacent tiles always,
// corner-adjacent ones only when requested. Matches make_tiles_2d ordering.
NeighborhoodStructure tile_neighbors(int side, int tile, bool include_corners);

// Empirical check that block gradients ignore coordinates outside the declared
// neighborhoods: perturbs one out-of-neighborhood block at a time and measures
// the induced change per unit perturbation.
struct SparsityReport {
  double max_violation = 0.0;
  bool pass = false;
  double tol = 0.0;
  int trials = 0;
  int worst_block = -1;      // block whose gradient moved the most
  int worst_perturbed = -1;  // block that was perturbed when that happened
};

SparsityReport probe_sparsity(const TargetDensity& target,
                              const NeighborhoodStructure& nbrs,
                              const BlockPartition& part, int trials, double tol,
                              RngStream& rng);

std::string to_json(const BlockPartition& part);
std::string to_json(const NeighborhoodStructure& nbrs);
BlockPartition partition_from_json(const std::string& text);
NeighborhoodStructure neighbors_from_json(const std::string& text);

}  // namespace mwg
