#pragma once

#include <cstdint>
#include <random>

namespace mmgbm {

// Seeded random streams pinned down to the bit level so that golden tests are
// portable: raw mt19937_64 outputs are mapped to doubles explicitly, normals
// come from Box-Muller (cosine branch, two uniforms per draw) and
// exponentials from the inverse CDF. None of the distribution adapters from
// <random> are used because their output is implementation-defined.
class Rng64 {
 public:
  explicit Rng64(std::uint64_t seed) : gen_(seed) {}

  // uniform on [0, 1), 53 random bits
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double exponential(double rate);
  double normal();

  // index into a weight row (weights sum to ~1); returns n-1 on fp leftovers
  int categorical(const double* weights, int n);

 private:
  std::mt19937_64 gen_;
};

// SplitMix64 step; used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mmgbm
