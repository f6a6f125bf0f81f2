#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace mwg {

// Deterministic random stream with a fixed draw-order contract: every normal
// variate consumes exactly two uniforms (Box-Muller without caching), so two
// streams seeded identically stay aligned draw-for-draw regardless of how the
// caller interleaves uniform() and normal(). Samplers rely on this to keep
// coupled chains and their solo counterparts on the same randomness.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Independent child stream; (seed, id) -> child seed is a fixed hash, so
  // substreams are reproducible and distinct for distinct ids.
  RngStream substream(std::uint64_t id) const;

  // U[0, 1) with 53 random bits.
  double uniform();

  // Standard normal; always consumes exactly two uniforms.
  double normal();

  Eigen::VectorXd normals(int n);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace mwg
