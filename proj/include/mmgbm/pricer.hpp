#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmgbm/bsm.hpp"
#include "mmgbm/model.hpp"

namespace mmgbm {

// Per-time-level quadrature weights: row n integrates over [0, n dt] and has
// n+1 entries. Even rows are composite Simpson; odd rows (n >= 3) are Simpson
// on the first n-1 intervals plus a trapezoid on the last; row 1 is (1/2, 1/2).
struct WeightMatrix {
  std::vector<std::vector<double>> rows;  // rows[n-1] = w_n(0..n)

  const std::vector<double>& row(int n) const { return rows.at(static_cast<size_t>(n) - 1); }
};

WeightMatrix build_weights(int n_steps);

// Discrete kernel: the lognormal transition density at grid points for l >= 1,
// a discrete Dirac (1/ds on the diagonal) at l = 0.
double kernel_G(int m, int m0, int l, int regime, const Grid& grid, const ModelParams& params);

struct StabilityReport {
  double max_exit_rate = 0.0;     // a = max_i lambda_i
  double rate_matrix_norm = 0.0;  // infinity norm of the rate matrix
  double dt = 0.0;
  double b = 0.0;                 // a / (1 - dt * norm)
  double dt_bound = 0.0;          // e^{-bT} / b
  double error_growth = 0.0;      // e^{bT} - 1, bounds all-level error propagation
  bool pass = false;
  std::string note;
};

// Sufficient condition dt <= e^{-bT}/b with b = a / (1 - dt * ||Lambda||).
// The norm is the infinity norm; the stability derivation bounds the coupling
// row-wise, which makes the max absolute row sum the conservative choice (the
// report carries a note since other norms would give different bounds).
// Throws DegenerateDenominator when dt * ||Lambda|| >= 1.
StabilityReport stability_check(const ModelParams& params, const Grid& grid);

// Largest dt passing the self-consistent stability bound for this horizon.
// Returns +inf for a chain that never leaves its state.
double stable_dt_bound(const ModelParams& params, double maturity);

// Discrete solution phi[n][m][i]: n time steps to maturity (n = 0 is the
// payoff), m space node (s = m ds), i regime (1-based accessor).
struct PriceSurface {
  ModelParams model;
  Contract contract;
  Grid grid;
  int n_levels = 0;   // N
  int n_nodes = 0;    // M0
  int n_regimes = 0;  // k
  double dt = 0.0;
  double ds = 0.0;
  std::vector<double> values;  // (N+1) * (M0+1) * k

  double value(int n, int m, int regime) const {
    return values[(static_cast<size_t>(n) * (n_nodes + 1) + m) * n_regimes + (regime - 1)];
  }
};

using LevelHook = std::function<void(int level, std::span<double> level_values)>;

struct SolveOptions {
  bool parallel = true;  // OpenMP over space nodes; results are identical for any thread count
  // Kernel values are cached in one table when it fits the budget; the
  // fallback recomputes them on the fly with the same arithmetic, so both
  // modes produce bit-identical surfaces.
  std::size_t kernel_table_budget = 1500u * 1000u * 1000u;
  double fixed_point_tol = 1e-12;
  int fixed_point_cap = 200;
  LevelHook post_level;  // experiment hook, may modify a finished level in place
};

// Marches the truncated integral equation from the payoff level to n = N.
// Refuses to run when the stability check fails.
PriceSurface solve_surface(const ModelParams& params, const Contract& contract, const Grid& grid,
                           const SolveOptions& opts = {});

// Plain serial transliteration of the scheme, kept as a reference for testing
// the optimized solver against. O(N^2 M0^2 k) with no caching; use small grids.
PriceSurface solve_surface_reference(const ModelParams& params, const Contract& contract,
                                     const Grid& grid);

// Linear interpolation in s at the nearest time level; exact at grid nodes.
// Throws OutOfDomain when s is outside [0, M] and OutOfRange when t is
// outside [0, T].
double price_at(const PriceSurface& surface, double t, double s, int regime);

struct PerturbationResult {
  double max_effect = 0.0;    // sup over later levels of sup-norm deviation
  double final_effect = 0.0;  // sup-norm deviation at the last level
  StabilityReport stability;
};

// Injects a sup-norm delta perturbation into level n_star, re-runs the march
// and reports how far the deviation propagates. Under the stability condition
// the effect stays below delta.
PerturbationResult perturbation_experiment(const ModelParams& params, const Contract& contract,
                                           const Grid& grid, int n_star, double delta,
                                           const SolveOptions& opts = {});

// Same, with the perturbation injected at every level 1..N-1; the deviation
// at level N stays below (e^{bT} - 1) delta.
PerturbationResult perturbation_all_levels(const ModelParams& params, const Contract& contract,
                                           const Grid& grid, double delta,
                                           const SolveOptions& opts = {});

}  // namespace mmgbm
