#include "mmgbm/rng.hpp"

#include <cmath>
#include <numbers>

namespace mmgbm {

double Rng64::exponential(double rate) {
  // inverse CDF; 1 - u is in (0, 1] so the log is finite
  const double u = uniform01();
  return -std::log(1.0 - u) / rate;
}

double Rng64::normal() {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int Rng64::categorical(const double* weights, int n) {
  const double u = uniform01();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return n - 1;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  std::uint64_t z = splitmix64(state);
  state = z ^ stream;
  return splitmix64(state);
}

}  // namespace mmgbm
