#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmgbm/model.hpp"

namespace mmgbm {

// Piecewise-constant right-continuous (cadlag) path of the modulating chain.
// times[j] is the start of the j-th constancy interval, times[0] == 0, and
// states[j] is the 1-based regime occupied on [times[j], times[j+1]).
struct RegimePath {
  std::vector<double> times;
  std::vector<int> states;
  double horizon = 0.0;

  std::size_t segments() const { return states.size(); }
};

// Holding time in state i ~ Exponential(lambda_i), next state drawn from row
// i of the jump chain. A state with zero exit rate is absorbing.
RegimePath simulate_ctmc(const ModelParams& params, int initial_state, double horizon,
                         std::uint64_t seed);

// Regime occupied at time t, right-continuous at transition instants.
int state_at(const RegimePath& path, double t);

std::string to_csv(const RegimePath& path);

}  // namespace mmgbm
