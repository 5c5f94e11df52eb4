#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmgbm/iv.hpp"
#include "mmgbm/markov.hpp"
#include "mmgbm/model.hpp"

namespace mmgbm {

// Physical-measure simulation: the chain path plus per-step exact-in-
// distribution lognormal asset updates using the regime at the step's left
// endpoint. times/spots/true_regimes have horizon_steps + 1 aligned entries.
struct SimulatedMarket {
  std::vector<double> times;
  std::vector<double> spots;
  std::vector<int> true_regimes;  // 1-based
  RegimePath path;
  ModelParams model;
  double step = 1.0 / 250.0;
  std::uint64_t seed = 0;
};

SimulatedMarket simulate_market(const MarketScenario& scenario, long horizon_steps);

enum class AivpMode { Fixed, Rounded };

struct AivpParams {
  double moneyness = 1.0;
  double ttm = 0.1;
  double strike_step = 0.01;  // rounded mode only
  double expiry_step = 0.08;  // rounded mode only
  PriceNoise noise;           // optional quote noise (sd = 0 disables)
};

// IV time series for the simulated market; prices use the true simulated
// regime (the experiment prices with full model knowledge).
IVSeries build_aivp(const SimulatedMarket& market, AivpMode mode, const AivpParams& aivp,
                    const Grid& base_grid, const SolveOptions& opts = {});

// Cutoffs from histogram local minima. Starts at initial_bin_width over the
// observed range, halves the width (up to 6 times) until k-1 interior minima
// separate the clusters, then keeps refining while the minima stay consistent
// to sharpen the cutoff values. Throws ClusteringAmbiguous when no binning
// isolates k-1 minima.
std::vector<double> histogram_cluster(std::span<const double> values, int num_regimes,
                                      double initial_bin_width = 0.01);

struct RecoveryResult {
  std::vector<double> cutoffs;
  std::vector<int> assigned;    // 1-based regime labels
  double accuracy = 0.0;        // fraction of instants assigned == true
  long n_correct = 0;
  long n_total = 0;
  int k = 0;
  std::vector<long> confusion;  // k x k, rows true, cols assigned; empty without truth

  long confusion_at(int true_regime, int assigned_regime) const {
    return confusion[static_cast<size_t>(true_regime - 1) * k + (assigned_regime - 1)];
  }
};

// Regime indices (1-based) sorted by ascending volatility; the recovery maps
// ascending IV bands onto this order.
std::vector<int> regimes_by_sigma(const ModelParams& params);

// Threshold classification of the IV series. Values below the first cutoff
// get the lowest-sigma regime and so on; a value equal to a cutoff joins the
// band above it. Accuracy and the confusion matrix are filled when
// true_regimes is non-empty.
RecoveryResult assign_regimes(const IVSeries& series, std::span<const double> cutoffs,
                              std::span<const int> regime_order,
                              std::span<const int> true_regimes = {});

}  // namespace mmgbm
