#include "mmgbm/markov.hpp"

#include <algorithm>

#include "mmgbm/csv.hpp"
#include "mmgbm/rng.hpp"

namespace mmgbm {

RegimePath simulate_ctmc(const ModelParams& params, int initial_state, double horizon,
                         std::uint64_t seed) {
  if (!params.validated) raise(ErrorCode::ValidationError, "params must be validated");
  if (initial_state < 1 || initial_state > params.num_regimes)
    raise(ErrorCode::ValidationError, "initial state out of range");
  if (!(horizon > 0.0)) raise(ErrorCode::ValidationError, "horizon must be > 0");

  Rng64 rng(seed);
  RegimePath path;
  path.horizon = horizon;
  path.times.push_back(0.0);
  path.states.push_back(initial_state);

  double t = 0.0;
  int state = initial_state - 1;
  while (true) {
    const double rate = params.lambda(state);
    if (rate <= 0.0) break;  // absorbing
    t += rng.exponential(rate);
    if (t >= horizon) break;
    state = rng.categorical(&params.jump_prob[static_cast<size_t>(state) * params.num_regimes],
                            params.num_regimes);
    path.times.push_back(t);
    path.states.push_back(state + 1);
  }
  return path;
}

int state_at(const RegimePath& path, double t) {
  if (t < 0.0 || t > path.horizon)
    raise(ErrorCode::OutOfRange, "t = " + fmt_double(t) + " outside [0, horizon]");
  // last segment starting at or before t (right-continuous at transitions)
  const auto it = std::upper_bound(path.times.begin(), path.times.end(), t);
  const auto idx = static_cast<size_t>(it - path.times.begin()) - 1;
  return path.states[idx];
}

std::string to_csv(const RegimePath& path) {
  CsvBuilder csv({"t_start", "state"});
  for (size_t j = 0; j < path.segments(); ++j)
    csv.cell(path.times[j]).cell(path.states[j]).endrow();
  return csv.str();
}

}  // namespace mmgbm
