#pragma once

#include "mmgbm/model.hpp"

namespace fixtures {

// three-regime running example used throughout the experiments
inline mmgbm::ModelParams example_model(double r = 0.05) {
  mmgbm::ModelParams p;
  p.num_regimes = 3;
  p.rate_matrix = {-10.0, 20.0 / 3.0, 10.0 / 3.0,
                   10.0,  -20.0,      10.0,
                   10.0 / 3.0, 20.0 / 3.0, -10.0};
  p.drift = {0.08, 0.09, 0.1};
  p.volatility = {0.2, 0.3, 0.4};
  p.interest_rate = r;
  return mmgbm::validate(std::move(p));
}

inline mmgbm::ModelParams bsm_model(double sigma, double r = 0.05, int k = 3) {
  mmgbm::ModelParams p;
  p.num_regimes = k;
  p.rate_matrix.assign(static_cast<size_t>(k) * k, 0.0);
  p.volatility.assign(static_cast<size_t>(k), sigma);
  p.interest_rate = r;
  return mmgbm::validate(std::move(p));
}

inline mmgbm::Contract unit_contract(double strike = 1.0, double maturity = 0.1) {
  mmgbm::Contract c;
  c.strike = strike;
  c.maturity = maturity;
  return c;
}

inline mmgbm::Grid example_grid(int n_time = 51, int n_space = 400, double bound = 1.5,
                                double maturity = 0.1) {
  mmgbm::Grid g;
  g.n_time = n_time;
  g.n_space = n_space;
  g.space_bound = bound;
  g.maturity = maturity;
  return g;
}

}  // namespace fixtures
