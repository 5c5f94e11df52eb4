#pragma once

#include <span>
#include <vector>

#include "mmgbm/markov.hpp"
#include "mmgbm/model.hpp"
#include "mmgbm/pricer.hpp"

namespace mmgbm {

struct IVQuery {
  double spot;
  double option_price;
  double strike;
  double ttm;  // years, > 0
  double rate;
};

// Unique vol with |bsm_price(I) - option_price| <= 1e-10, found by bisection
// on (1e-8, 5) refined with safeguarded Newton steps. Prices outside the
// no-arbitrage interval ((s - K e^{-r tau})^+, s) raise PriceBelowIntrinsic /
// PriceAboveSpot.
double implied_vol(const IVQuery& q);

// round half down: nearest integer, ties toward the smaller one
double round_half_down(double x);

enum class IVKind { FixedContract, RoundedContract };

// Time-indexed implied vols plus the contract actually used at each instant.
struct IVSeries {
  IVKind kind = IVKind::FixedContract;
  std::vector<double> times;
  std::vector<double> iv;
  std::vector<double> spot;
  std::vector<double> strike_used;
  std::vector<double> ttm_used;
  std::vector<int> regime_true;  // optional; empty when unknown

  std::size_t size() const { return times.size(); }
};

std::string to_csv(const IVSeries& series);

// Optional additive Gaussian noise on option prices before inversion, for
// exploring sensitivity to quote imperfections. Noisy prices are clamped just
// inside the no-arbitrage interval.
struct PriceNoise {
  double sd = 0.0;
  std::uint64_t seed = 0;
};

// IV process with fixed moneyness and TTM: at each instant the contract has
// strike p * S_t and time to maturity tau. One strike-normalized surface
// (scale invariance) serves the whole series; base_grid supplies the space
// resolution and truncation bound.
IVSeries iv_process_fixed(const ModelParams& params, double moneyness, double ttm,
                          const RegimePath& path, std::span<const double> times,
                          std::span<const double> spots, const Grid& base_grid,
                          const SolveOptions& opts = {}, const PriceNoise* noise = nullptr);

// Realistic variant: strikes snapped to multiples of strike_step and expiries
// to multiples of expiry_step, both with round-half-down ties.
IVSeries iv_process_rounded(const ModelParams& params, double moneyness, double ttm,
                            double strike_step, double expiry_step, const RegimePath& path,
                            std::span<const double> times, std::span<const double> spots,
                            const Grid& base_grid, const SolveOptions& opts = {},
                            const PriceNoise* noise = nullptr);

struct MeanIVByState {
  // per regime (0-based index): ascending (spot, mean iv) pairs
  std::vector<std::vector<std::pair<double, double>>> table;
  // relative spread (max - min) / min of the per-spot means; NaN when the
  // regime has no observations
  std::vector<double> ebar;

  double max_ebar() const;
};

// Per-regime, per-spot-bucket mean IV. Regimes come from series.regime_true
// when present, else from the path. Buckets are the distinct observed spots.
MeanIVByState mean_iv_by_state(const IVSeries& series, const RegimePath* path, int num_regimes);

// Auxiliary grid for a contract horizon: keeps the base grid's space
// resolution and bound, picks the time step from the stability bound (never
// coarser than the base step). When level_quantum > 0 and the horizon is a
// multiple of it, levels are aligned so those instants land on grid levels.
Grid grid_for_horizon(const ModelParams& params, double maturity, const Grid& base,
                      double level_quantum = 0.0);

struct ConstancyTable {
  std::vector<double> spots;
  std::vector<std::vector<double>> iv;  // [regime-1][spot index]
  std::vector<double> ebar;             // per-regime relative spread
};

// Per-state mean IV across spots with the contract struck at moneyness * s.
// Each spot is priced on its own absolute grid (the strike moves with the
// spot), so this probes how uniformly the scheme treats different spot
// levels; the relative spread would be zero by construction through the
// normalized-surface route.
ConstancyTable aivp_constancy_sweep(const ModelParams& params, double moneyness, double ttm,
                                    std::span<const double> spots, const Grid& base_grid,
                                    const SolveOptions& opts = {});

}  // namespace mmgbm
