#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmgbm/errors.hpp"

namespace mmgbm {

// Market description: generator of the modulating chain plus per-regime
// drift/volatility and the constant short rate. Regimes are 1-based in every
// public interface; internal storage is 0-based row-major.
//
// The drift vector is used only when simulating real-world paths. Pricing is
// done under the risk-neutral drift (the short rate) and never reads it.
struct ModelParams {
  int num_regimes = 0;
  std::vector<double> rate_matrix;  // k x k, per year
  std::vector<double> drift;        // mu, per year
  std::vector<double> volatility;   // sigma, per sqrt(year), > 0
  double interest_rate = 0.05;      // continuously compounded, per year

  // Filled in by validate().
  std::vector<double> exit_rate;  // lambda_i = |Lambda_ii|
  std::vector<double> jump_prob;  // k x k jump chain, p_ij = lambda_ij / lambda_i
  bool validated = false;

  double entry(int i, int j) const { return rate_matrix[static_cast<size_t>(i) * num_regimes + j]; }
  double lambda(int i) const { return exit_rate[static_cast<size_t>(i)]; }     // 0-based
  double sigma(int i) const { return volatility[static_cast<size_t>(i)]; }     // 0-based
  double p(int i, int j) const { return jump_prob[static_cast<size_t>(i) * num_regimes + j]; }
  double max_exit_rate() const;
  double inf_norm() const;  // max absolute row sum of the rate matrix
};

// Checks conservativeness (row sums 0 to 1e-12), nonnegative off-diagonals and
// positive volatilities, then caches exit rates and the jump chain.
ModelParams validate(ModelParams params);

struct Contract {
  double strike = 1.0;
  double maturity = 0.1;   // T, years
  double eval_time = 0.0;  // t in [0, T]
  std::optional<double> moneyness;  // p = K / spot
  std::optional<double> ttm;        // tau = T - t when both forms are used
};

Contract validate(Contract c);

// Discretization of the truncated pricing domain [0, T] x [0, M].
struct Grid {
  int n_time = 51;           // N
  int n_space = 400;         // M0, must be even (space weights are Simpson's)
  double space_bound = 1.5;  // M, currency; must exceed the strike
  double maturity = 0.1;     // horizon the time steps span

  double dt() const { return maturity / n_time; }
  double ds() const { return space_bound / n_space; }
};

Grid validate(Grid g, const Contract& c);

struct MarketScenario {
  ModelParams model;
  double initial_price = 1.0;
  int initial_regime = 1;     // 1-based
  double step = 1.0 / 250.0;  // h, years
  long horizon_steps = 200;
  std::uint64_t rng_seed = 0;
};

MarketScenario validate(MarketScenario s);

struct LoadedConfig {
  MarketScenario scenario;
  Contract contract;
  Grid grid;
};

// Flat key-value config with [model], [contract], [grid], [scenario] sections.
// Unknown keys and malformed lines are rejected; missing optional keys take
// the documented defaults (see README). `name` is used in error messages.
LoadedConfig parse_config(const std::string& text, const std::string& name = "<config>");
LoadedConfig load_config(const std::string& path);

// Emits a config that parses back to a bit-identical LoadedConfig.
std::string serialize_config(const LoadedConfig& cfg);

}  // namespace mmgbm
