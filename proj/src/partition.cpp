#include "mwg/partition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "mwg/rng.hpp"
#include "mwg/target.hpp"

namespace mwg {
namespace {

int checked_div(int total, int piece, const char* what) {
  if (piece < 1) throw std::invalid_argument(std::string(what) + ": size must be >= 1");
  if (total % piece != 0)
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(piece) +
                                " does not divide " + std::to_string(total));
  return total / piece;
}

}  // namespace

BlockPartition make_partition(int n, std::vector<std::vector<int>> blocks) {
  if (n < 1) throw std::invalid_argument("make_partition: n must be >= 1");
  if (blocks.empty()) throw std::invalid_argument("make_partition: no blocks");
  std::vector<int> owner(n, -1);
  int q_max = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& blk = blocks[b];
    if (blk.empty())
      throw std::invalid_argument("make_partition: block " + std::to_string(b) + " is empty");
    std::sort(blk.begin(), blk.end());
    for (int idx : blk) {
      if (idx < 0 || idx >= n)
        throw std::invalid_argument("make_partition: index " + std::to_string(idx) +
                                    " out of range [0," + std::to_string(n) + ")");
      if (owner[idx] != -1)
        throw std::invalid_argument("make_partition: index " + std::to_string(idx) +
                                    " appears in blocks " + std::to_string(owner[idx]) +
                                    " and " + std::to_string(b));
      owner[idx] = static_cast<int>(b);
    }
    q_max = std::max(q_max, static_cast<int>(blk.size()));
  }
  for (int i = 0; i < n; ++i)
    if (owner[i] == -1)
      throw std::invalid_argument("make_partition: index " + std::to_string(i) +
                                  " not covered by any block");
  return BlockPartition{n, std::move(blocks), q_max};
}

BlockPartition make_uniform_1d(int n, int q) {
  const int m = checked_div(n, q, "make_uniform_1d");
  std::vector<std::vector<int>> blocks(m);
  for (int b = 0; b < m; ++b) {
    blocks[b].resize(q);
    for (int i = 0; i < q; ++i) blocks[b][i] = b * q + i;
  }
  return BlockPartition{n, std::move(blocks), q};
}

BlockPartition make_tiles_2d(int side, int tile) {
  const int t = checked_div(side, tile, "make_tiles_2d");
  std::vector<std::vector<int>> blocks;
  blocks.reserve(static_cast<std::size_t>(t) * t);
  for (int tb = 0; tb < t; ++tb) {    // tile column (j direction)
    for (int ta = 0; ta < t; ++ta) {  // tile row (i direction), fastest
       std::vector<int> blk;
      blk.reserve(static_cast<std::size_t>(tile) * tile);
      for (int j = tb * tile; j < (tb + 1) * tile; ++j)
        for (int i = ta * tile; i < (ta + 1) * tile; ++i) blk.push_back(i + side * j);
      std::sort(blk.begin(), blk.end());
      blocks.push_back(std::move(blk));
    }
  }
  return BlockPartition{side * side, std::move(blocks), tile * tile};
}

BlockPartition single_block(int n) { return make_uniform_1d(n, n); }

NeighborhoodStructure make_neighbors(std::vector<std::vector<int>> sets) {
  const int m = static_cast<int>(sets.size());
  int s_max = 0;
  for (int j = 0; j < m; ++j) {
    auto& s = sets[j];
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    for (int i : s)
      if (i < 0 || i >= m)
        throw std::invalid_argument("make_neighbors: block id " + std::to_string(i) +
                                    " out of range");
    if (!std::binary_search(s.begin(), s.end(), j))
      throw std::invalid_argument("make_neighbors: set " + std::to_string(j) +
                                  " does not contain its own block");
    s_max = std::max(s_max, static_cast<int>(s.size()));
  }
  for (int j = 0; j < m; ++j)
    for (int i : sets[j])
      if (!std::binary_search(sets[i].begin(), sets[i].end(), j))
        throw std::invalid_argument("make_neighbors: asymmetric sets, " + std::to_string(i) +
                                    " in set " + std::to_string(j) + " but not vice versa");
  return NeighborhoodStructure{std::move(sets), s_max};
}

NeighborhoodStructure neighbors_from_precision(const Eigen::MatrixXd& P,
                                               const BlockPartition& part, double tol) {
  if (P.rows() != part.n || P.cols() != part.n)
    throw std::invalid_argument("neighbors_from_precision: matrix is " +
                                std::to_string(P.rows()) + "x" + std::to_string(P.cols()) +
                                ", partition expects n=" + std::to_string(part.n));
  if (tol < 0) throw std::invalid_argument("neighbors_from_precision: tol must be >= 0");
  const double scale = P.cwiseAbs().maxCoeff();
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0))
    throw std::invalid_argument("neighbors_from_precision: matrix not symmetric");

  const int m = part.num_blocks();
  const double cut = tol * scale;
  std::vector<std::vector<int>> sets(m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      bool coupled = (i == j);  // diagonal blocks always count
      for (int a : part.blocks[i]) {
        if (coupled) break;
        for (int b : part.blocks[j]) {
          if (std::abs(P(a, b)) > cut) {
            coupled = true;
            break;
          }
        }
      }
      if (coupled) sets[j].push_back(i);
    }
  }
  return make_neighbors(std::move(sets));
}

NeighborhoodStructure tile_neighbors(int side, int tile, bool include_corners) {
  const int t = checked_div(side, tile, "tile_neighbors");
  std::vector<std::vector<int>> sets(static_cast<std::size_t>(t) * t);
  auto id = [t](int a, int b) { return a + t * b; };
  for (int b = 0; b < t; ++b) {
    for (int a = 0; a < t; ++a) {
      auto& s = sets[id(a, b)];
      for (int db = -1; db <= 1; ++db) {
        for (int da = -1; da <= 1; ++da) {
          if (!include_corners && da != 0 && db != 0) continue;
          const int na = a + da, nb = b + db;
          if (na < 0 || na >= t || nb < 0 || nb >= t) continue;
          s.push_back(id(na, nb));
        }
      }
    }
  }
  return make_neighbors(std::move(sets));
}

SparsityReport probe_sparsity(const TargetDensity& target, const NeighborhoodStructure& nbrs,
                              const BlockPartition& part, int trials, double tol,
                              RngStream& rng) {
  const int m = part.num_blocks();
  if (static_cast<int>(nbrs.sets.size()) != m)
    throw std::invalid_argument("probe_sparsity: neighborhood count " +
                                std::to_string(nbrs.sets.size()) + " != block count " +
                                std::to_string(m));
  SparsityReport rep;
  rep.tol = tol;
  rep.trials = trials;
  const double eps = 1e-3;
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd x = rng.normals(part.n);
    for (int j = 0; j < m; ++j) {
      const Eigen::VectorXd vj = target.block_grad(j, x, part);
      const auto& in = nbrs.sets[j];
      for (int k = 0; k < m; ++k) {
        if (std::binary_search(in.begin(), in.end(), k)) continue;
        Eigen::VectorXd xp = x;
        double norm2 = 0.0;
        for (int idx : part.blocks[k]) {
          const double d = eps * rng.normal();
          xp[idx] += d;
          norm2 += d * d;
        }
        const double dnorm = std::sqrt(norm2);
        if (dnorm == 0.0) continue;
        const double viol = (target.block_grad(j, xp, part) - vj).norm() / dnorm;
        if (viol > rep.max_violation) {
          rep.max_violation = viol;
          rep.worst_block = j;
          rep.worst_perturbed = k;
        }
      }
    }
  }
  rep.pass = rep.max_violation <= tol;
  return rep;
}

std::string to_json(const BlockPartition& part) {
  nlohmann::json j;
  j["n"] = part.n;
  j["blocks"] = part.blocks;
  return j.dump();
}

std::string to_json(const NeighborhoodStructure& nbrs) {
  nlohmann::json j;
  j["sets"] = nbrs.sets;
  return j.dump();
}

BlockPartition partition_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  return make_partition(j.at("n").get<int>(),
                        j.at("blocks").get<std::vector<std::vector<int>>>());
}

NeighborhoodStructure neighbors_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  return make_neighbors(j.at("sets").get<std::vector<std::vector<int>>>());
}

}  // namespace mwg
