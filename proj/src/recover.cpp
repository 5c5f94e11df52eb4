#include "mmgbm/recover.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmgbm/csv.hpp"
#include "mmgbm/rng.hpp"

namespace mmgbm {

SimulatedMarket simulate_market(const MarketScenario& scenario, long horizon_steps) {
  if (!scenario.model.validated) raise(ErrorCode::ValidationError, "params must be validated");
  if (horizon_steps < 0) raise(ErrorCode::ValidationError, "horizon_steps must be >= 0");

  SimulatedMarket market;
  market.model = scenario.model;
  market.step = scenario.step;
  market.seed = scenario.rng_seed;

  const double h = scenario.step;
  if (horizon_steps == 0) {
    market.path.horizon = 0.0;
    market.path.times.push_back(0.0);
    market.path.states.push_back(scenario.initial_regime);
    return market;
  }

  const double horizon = horizon_steps * h;
  market.path = simulate_ctmc(scenario.model, scenario.initial_regime, horizon, scenario.rng_seed);

  // the asset stream is derived from the scenario seed so a single seed pins
  // the whole market
  Rng64 rng_z(derive_seed(scenario.rng_seed, 1));
  const long n = horizon_steps + 1;
  market.times.resize(n);
  market.spots.resize(n);
  market.true_regimes.resize(n);
  market.times[0] = 0.0;
  market.spots[0] = scenario.initial_price;
  market.true_regimes[0] = state_at(market.path, 0.0);
  for (long j = 1; j < n; ++j) {
    market.times[j] = j * h;
    const int regime = market.true_regimes[j - 1];  // left endpoint of the step
    const double mu = scenario.model.drift[static_cast<size_t>(regime) - 1];
    const double sig = scenario.model.sigma(regime - 1);
    const double z = rng_z.normal();
    market.spots[j] =
        market.spots[j - 1] * std::exp((mu - 0.5 * sig * sig) * h + sig * std::sqrt(h) * z);
    market.true_regimes[j] = state_at(market.path, market.times[j]);
  }
  return market;
}

IVSeries build_aivp(const SimulatedMarket& market, AivpMode mode, const AivpParams& aivp,
                    const Grid& base_grid, const SolveOptions& opts) {
  const PriceNoise* noise = aivp.noise.sd > 0.0 ? &aivp.noise : nullptr;
  if (mode == AivpMode::Fixed)
    return iv_process_fixed(market.model, aivp.moneyness, aivp.ttm, market.path, market.times,
                            market.spots, base_grid, opts, noise);
  return iv_process_rounded(market.model, aivp.moneyness, aivp.ttm, aivp.strike_step,
                            aivp.expiry_step, market.path, market.times, market.spots, base_grid,
                            opts, noise);
}

namespace {

struct Segment {
  int first_bin = 0;
  int last_bin = 0;
  long count = 0;
};

struct Valley {
  double center = 0.0;
  long depth = 0;        // persistence: min flanking peak minus valley count
  long count = 0;
};

std::vector<Valley> plateau_minima(const std::vector<long>& counts, double lo, double width) {
  std::vector<Segment> segs;
  for (size_t b = 0; b < counts.size(); ++b) {
    if (!segs.empty() && segs.back().count == counts[b]) {
      segs.back().last_bin = static_cast<int>(b);
    } else {
      segs.push_back({static_cast<int>(b), static_cast<int>(b), counts[b]});
    }
  }
  std::vector<Valley> valleys;
  for (size_t si = 1; si + 1 < segs.size(); ++si) {
    if (!(segs[si].count < segs[si - 1].count && segs[si].count < segs[si + 1].count)) continue;
    long peak_left = 0, peak_right = 0;
    for (size_t a = 0; a < si; ++a) peak_left = std::max(peak_left, segs[a].count);
    for (size_t a = si + 1; a < segs.size(); ++a) peak_right = std::max(peak_right, segs[a].count);
    Valley v;
    v.count = segs[si].count;
    v.depth = std::min(peak_left, peak_right) - segs[si].count;
    v.center = lo + 0.5 * (segs[si].first_bin + segs[si].last_bin + 1) * width;
    valleys.push_back(v);
  }
  return valleys;
}

}  // namespace

std::vector<double> histogram_cluster(std::span<const double> values, int num_regimes,
                                      double initial_bin_width) {
  if (num_regimes < 2) raise(ErrorCode::ValidationError, "need at least two regimes to separate");
  if (!(initial_bin_width > 0.0)) raise(ErrorCode::ValidationError, "bin width must be > 0");
  if (values.size() < static_cast<size_t>(num_regimes))
    raise(ErrorCode::ClusteringAmbiguous, "fewer observations than regimes");

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) raise(ErrorCode::ClusteringAmbiguous, "all observations identical");

  const int wanted = num_regimes - 1;
  std::vector<double> accepted;
  double accepted_width = 0.0;

  double width = initial_bin_width;
  for (int attempt = 0; attempt <= 6; ++attempt, width *= 0.5) {
    const int nbins = std::max(1, static_cast<int>(std::ceil((hi - lo) / width - 1e-9)));
    std::vector<long> counts(static_cast<size_t>(nbins), 0);
    for (double v : values) {
      int idx = static_cast<int>((v - lo) / width);  // bins left-closed, last bin closed
      counts[static_cast<size_t>(std::clamp(idx, 0, nbins - 1))] += 1;
    }
    std::vector<Valley> valleys = plateau_minima(counts, lo, width);
    if (static_cast<int>(valleys.size()) < wanted) {
      if (!accepted.empty()) break;  // refinement degraded the picture, keep the last good one
      continue;
    }
    // keep the k-1 most persistent valleys; extra shallow dips are noise
    std::stable_sort(valleys.begin(), valleys.end(), [](const Valley& a, const Valley& b) {
      if (a.depth != b.depth) return a.depth > b.depth;
      return a.count < b.count;
    });
    valleys.resize(static_cast<size_t>(wanted));
    std::vector<double> cutoffs;
    for (const Valley& v : valleys) cutoffs.push_back(v.center);
    std::sort(cutoffs.begin(), cutoffs.end());

    if (accepted.empty()) {
      accepted = cutoffs;
      accepted_width = width;
    } else {
      bool consistent = true;
      for (int c = 0; c < wanted; ++c)
        consistent = consistent && std::abs(cutoffs[c] - accepted[c]) <= accepted_width + 1e-12;
      if (!consistent) break;
      accepted = cutoffs;
      accepted_width = width;
    }
  }
  if (accepted.empty())
    raise(ErrorCode::ClusteringAmbiguous, "no binning isolated " + std::to_string(wanted) +
                                              " interior minima; regimes may be too close");
  return accepted;
}

std::vector<int> regimes_by_sigma(const ModelParams& params) {
  std::vector<int> order(static_cast<size_t>(params.num_regimes));
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return params.sigma(a - 1) < params.sigma(b - 1); });
  return order;
}

RecoveryResult assign_regimes(const IVSeries& series, std::span<const double> cutoffs,
                              std::span<const int> regime_order,
                              std::span<const int> true_regimes) {
  for (size_t c = 1; c < cutoffs.size(); ++c)
    if (!(cutoffs[c] > cutoffs[c - 1]))
      raise(ErrorCode::ValidationError, "cutoffs must be strictly increasing");
  if (regime_order.size() != cutoffs.size() + 1)
    raise(ErrorCode::ValidationError, "need one regime label per band");
  if (!true_regimes.empty() && true_regimes.size() != series.size())
    raise(ErrorCode::ValidationError, "true_regimes must align with the series");

  RecoveryResult res;
  res.cutoffs.assign(cutoffs.begin(), cutoffs.end());
  res.k = static_cast<int>(regime_order.size());
  res.assigned.reserve(series.size());
  for (double v : series.iv) {
    size_t band = 0;
    while (band < cutoffs.size() && v >= cutoffs[band]) ++band;
    res.assigned.push_back(regime_order[band]);
  }
  if (!true_regimes.empty()) {
    res.confusion.assign(static_cast<size_t>(res.k) * res.k, 0);
    res.n_total = static_cast<long>(series.size());
    for (size_t j = 0; j < series.size(); ++j) {
      if (res.assigned[j] == true_regimes[j]) ++res.n_correct;
      res.confusion[static_cast<size_t>(true_regimes[j] - 1) * res.k + (res.assigned[j] - 1)] += 1;
    }
    res.accuracy = res.n_total > 0 ? static_cast<double>(res.n_correct) / res.n_total : 0.0;
  }
  return res;
}

}  // namespace mmgbm
