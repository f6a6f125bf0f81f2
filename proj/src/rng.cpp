#include "mwg/rng.hpp"

#include <cmath>

namespace mwg {
namespace {

// splitmix64: scrambles seeds so that nearby (seed, id) pairs give unrelated
// mt19937_64 initial states.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

RngStream RngStream::substream(std::uint64_t id) const {
  return RngStream(splitmix64(seed_ ^ splitmix64(id + 1)));
}

double RngStream::uniform() {
  // Top 53 bits -> double in [0, 1).
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  // Box-Muller, cosine branch only: exactly two uniforms per variate.
  const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Eigen::VectorXd RngStream::normals(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

}  // namespace mwg
