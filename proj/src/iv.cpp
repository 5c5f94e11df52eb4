#include "mmgbm/iv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mmgbm/csv.hpp"
#include "mmgbm/rng.hpp"

namespace mmgbm {

namespace {
constexpr double kVolLo = 1e-8;
constexpr double kVolHi = 5.0;
constexpr double kPriceTol = 1e-10;
}  // namespace

double implied_vol(const IVQuery& q) {
  if (!(q.spot > 0.0) || !(q.strike > 0.0))
    raise(ErrorCode::ValidationError, "spot and strike must be > 0");
  if (!(q.ttm > 0.0)) raise(ErrorCode::ValidationError, "ttm must be > 0");

  const double intrinsic = std::max(q.spot - q.strike * std::exp(-q.rate * q.ttm), 0.0);
  if (q.option_price <= intrinsic)
    raise(ErrorCode::PriceBelowIntrinsic, "price " + fmt_double(q.option_price) +
                                              " <= intrinsic " + fmt_double(intrinsic));
  if (q.option_price >= q.spot)
    raise(ErrorCode::PriceAboveSpot,
          "price " + fmt_double(q.option_price) + " >= spot " + fmt_double(q.spot));

  auto price_of = [&](double vol) {
    return bsm_price(BsmInputs{q.spot, q.strike, q.ttm, q.rate, vol});
  };
  double lo = kVolLo, hi = kVolHi;
  double f_lo = price_of(lo) - q.option_price;
  double f_hi = price_of(hi) - q.option_price;
  if (std::abs(f_lo) <= kPriceTol) return lo;
  if (std::abs(f_hi) <= kPriceTol) return hi;
  if (f_lo > 0.0 || f_hi < 0.0)
    raise(ErrorCode::NoConvergence, "no root in the vol bracket (" + fmt_double(kVolLo) + ", " +
                                        fmt_double(kVolHi) + ")");

  // bisection bracket refined with safeguarded Newton steps; besides the
  // price tolerance the root itself must be pinned down (low-Vega regions can
  // satisfy the price tolerance far from the root)
  double vol = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = price_of(vol) - q.option_price;
    const double vega = bsm_vega(BsmInputs{q.spot, q.strike, q.ttm, q.rate, vol});
    const bool vol_pinned = std::abs(f) <= vega * 1e-9 || hi - lo <= 1e-9;
    if (std::abs(f) <= kPriceTol && vol_pinned) return vol;
    if (f > 0.0) {
      hi = vol;
    } else {
      lo = vol;
    }
    double next = std::numeric_limits<double>::quiet_NaN();
    if (it % 2 == 0 && vega > 1e-14) next = vol - f / vega;
    // plain bisection on odd iterations and whenever the Newton step escapes
    // the bracket, so the bracket provably collapses
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    vol = next;
  }
  raise(ErrorCode::NoConvergence, "bracket exhausted after 200 iterations");
}

double round_half_down(double x) {
  // Exact ties must resolve downward. Day-grid arithmetic reaches ties like
  // 3.5 through products of inexact doubles, so values within 1e-9 of a
  // half-integer are snapped onto it first.
  const double doubled = std::round(2.0 * x);
  if (std::abs(2.0 * x - doubled) < 1e-9) x = 0.5 * doubled;
  return std::ceil(x - 0.5);
}

Grid grid_for_horizon(const ModelParams& params, double maturity, const Grid& base,
                      double level_quantum) {
  if (!(maturity > 0.0)) raise(ErrorCode::ValidationError, "maturity must be > 0");
  Grid g;
  g.n_space = base.n_space;
  g.space_bound = base.space_bound;
  g.maturity = maturity;

  double dt_target = 0.95 * stable_dt_bound(params, maturity);
  const double base_dt = base.dt();
  if (!(dt_target > 0.0)) raise(ErrorCode::StabilityViolation, "no stable time step exists");
  dt_target = std::min(dt_target, base_dt);

  if (level_quantum > 0.0) {
    const double ratio = maturity / level_quantum;
    const double rounded = std::round(ratio);
    if (rounded >= 1.0 && std::abs(ratio - rounded) < 1e-9) {
      // align levels so multiples of the quantum land exactly on the grid
      const int per_quantum = std::max(1, static_cast<int>(std::ceil(level_quantum / dt_target - 1e-12)));
      g.n_time = static_cast<int>(rounded) * per_quantum;
      return g;
    }
  }
  g.n_time = std::max(1, static_cast<int>(std::ceil(maturity / dt_target - 1e-12)));
  return g;
}

namespace {

// One strike-normalized surface serves every instant: the price with strike K
// and spot S equals K times the strike-1 price at spot S / K, so the cache key
// reduces to the horizon the surface must span.
PriceSurface normalized_surface(const ModelParams& params, double horizon, const Grid& base,
                                double level_quantum, const SolveOptions& opts) {
  Contract unit;
  unit.strike = 1.0;
  unit.maturity = horizon;
  const Grid g = grid_for_horizon(params, horizon, base, level_quantum);
  return solve_surface(params, unit, g, opts);
}

void check_series_inputs(const RegimePath& path, std::span<const double> times,
                         std::span<const double> spots) {
  if (times.size() != spots.size())
    raise(ErrorCode::ValidationError, "times and spots must be aligned");
  for (double s : spots)
    if (!(s > 0.0)) raise(ErrorCode::ValidationError, "spots must be > 0");
  if (!times.empty() && (times.front() < 0.0 || times.back() > path.horizon))
    raise(ErrorCode::OutOfRange, "sampling instants outside the path horizon");
}

// applies quote noise and keeps the price invertible
double perturb_price(double price, double spot, double strike, double ttm, double rate,
                     Rng64& rng, double sd) {
  const double noisy = price + sd * rng.normal();
  const double intrinsic = std::max(spot - strike * std::exp(-rate * ttm), 0.0);
  const double lo = intrinsic + 1e-12;
  const double hi = spot * (1.0 - 1e-12);
  return std::clamp(noisy, lo, hi);
}

}  // namespace

IVSeries iv_process_fixed(const ModelParams& params, double moneyness, double ttm,
                          const RegimePath& path, std::span<const double> times,
                          std::span<const double> spots, const Grid& base_grid,
                          const SolveOptions& opts, const PriceNoise* noise) {
  if (!(moneyness > 0.0) || !(ttm > 0.0))
    raise(ErrorCode::ValidationError, "moneyness and ttm must be > 0");
  check_series_inputs(path, times, spots);

  IVSeries series;
  series.kind = IVKind::FixedContract;
  if (times.empty()) return series;

  const PriceSurface surf = normalized_surface(params, ttm, base_grid, 0.0, opts);
  const double r = params.interest_rate;
  Rng64 noise_rng(noise ? noise->seed : 0);
  series.times.reserve(times.size());
  for (size_t j = 0; j < times.size(); ++j) {
    const double s = spots[j];
    const double strike = moneyness * s;
    const int regime = state_at(path, times[j]);
    // phi(t, s, i; p s, t + tau) = s * phi(0, 1/p, i; 1, tau) by scale
    // invariance and time homogeneity
    double option_price = strike * price_at(surf, 0.0, s / strike, regime);
    if (noise && noise->sd > 0.0)
      option_price = perturb_price(option_price, s, strike, ttm, r, noise_rng, noise->sd);
    const double iv = implied_vol(IVQuery{s, option_price, strike, ttm, r});
    series.times.push_back(times[j]);
    series.iv.push_back(iv);
    series.spot.push_back(s);
    series.strike_used.push_back(strike);
    series.ttm_used.push_back(ttm);
    series.regime_true.push_back(regime);
  }
  return series;
}

IVSeries iv_process_rounded(const ModelParams& params, double moneyness, double ttm,
                            double strike_step, double expiry_step, const RegimePath& path,
                            std::span<const double> times, std::span<const double> spots,
                            const Grid& base_grid, const SolveOptions& opts,
                            const PriceNoise* noise) {
  if (!(moneyness > 0.0) || !(ttm > 0.0))
    raise(ErrorCode::ValidationError, "moneyness and ttm must be > 0");
  if (!(strike_step > 0.0) || !(expiry_step > 0.0))
    raise(ErrorCode::ValidationError, "strike_step and expiry_step must be > 0");
  if (!(ttm > 0.5 * expiry_step))
    raise(ErrorCode::ValidationError, "need ttm > expiry_step / 2 so rounded TTMs stay positive");
  check_series_inputs(path, times, spots);

  IVSeries series;
  series.kind = IVKind::RoundedContract;
  if (times.empty()) return series;

  const size_t n = times.size();
  std::vector<double> strikes(n), ttms(n);
  double ttm_max = 0.0;
  for (size_t j = 0; j < n; ++j) {
    strikes[j] = round_half_down(moneyness * spots[j] / strike_step) * strike_step;
    ttms[j] = round_half_down((times[j] + ttm) / expiry_step) * expiry_step - times[j];
    if (!(ttms[j] > 0.0))
      raise(ErrorCode::NonpositiveTTM,
            "rounded ttm " + fmt_double(ttms[j]) + " at t = " + fmt_double(times[j]));
    if (!(strikes[j] > 0.0))
      raise(ErrorCode::ValidationError, "rounded strike vanished; strike_step too coarse");
    ttm_max = std::max(ttm_max, ttms[j]);
  }

  // sampling usually happens on a uniform day grid; aligning levels with it
  // makes every rounded TTM land exactly on a surface level
  const double quantum = n >= 2 ? times[1] - times[0] : 0.0;
  const PriceSurface surf = normalized_surface(params, ttm_max, base_grid,
                                               quantum > 0.0 ? quantum : 0.0, opts);
  const double r = params.interest_rate;
  Rng64 noise_rng(noise ? noise->seed : 0);
  for (size_t j = 0; j < n; ++j) {
    const double s = spots[j];
    const int regime = state_at(path, times[j]);
    double option_price =
        strikes[j] * price_at(surf, ttm_max - ttms[j], s / strikes[j], regime);
    if (noise && noise->sd > 0.0)
      option_price = perturb_price(option_price, s, strikes[j], ttms[j], r, noise_rng, noise->sd);
    const double iv = implied_vol(IVQuery{s, option_price, strikes[j], ttms[j], r});
    series.times.push_back(times[j]);
    series.iv.push_back(iv);
    series.spot.push_back(s);
    series.strike_used.push_back(strikes[j]);
    series.ttm_used.push_back(ttms[j]);
    series.regime_true.push_back(regime);
  }
  return series;
}

double MeanIVByState::max_ebar() const {
  double m = 0.0;
  for (double e : ebar)
    if (!std::isnan(e)) m = std::max(m, e);
  return m;
}

MeanIVByState mean_iv_by_state(const IVSeries& series, const RegimePath* path, int num_regimes) {
  if (series.size() == 0) raise(ErrorCode::EmptyBucket, "series has no observations");
  const bool has_truth = series.regime_true.size() == series.size();
  if (!has_truth && path == nullptr)
    raise(ErrorCode::ValidationError, "need regime_true or a path to label regimes");

  // (regime, spot) -> (sum, count)
  std::map<std::pair<int, double>, std::pair<double, long>> cells;
  for (size_t j = 0; j < series.size(); ++j) {
    const int regime = has_truth ? series.regime_true[j] : state_at(*path, series.times[j]);
    auto& cell = cells[{regime, series.spot[j]}];
    cell.first += series.iv[j];
    cell.second += 1;
  }

  MeanIVByState out;
  out.table.assign(num_regimes, {});
  out.ebar.assign(num_regimes, std::numeric_limits<double>::quiet_NaN());
  for (const auto& [key, cell] : cells)
    out.table[static_cast<size_t>(key.first) - 1].emplace_back(key.second,
                                                               cell.first / cell.second);
  for (int i = 0; i < num_regimes; ++i) {
    const auto& row = out.table[i];
    if (row.empty()) continue;
    double mn = row.front().second, mx = row.front().second;
    for (const auto& [spot, mean] : row) {
      mn = std::min(mn, mean);
      mx = std::max(mx, mean);
    }
    out.ebar[i] = (mx - mn) / mn;
  }
  return out;
}

ConstancyTable aivp_constancy_sweep(const ModelParams& params, double moneyness, double ttm,
                                    std::span<const double> spots, const Grid& base_grid,
                                    const SolveOptions& opts) {
  if (!(moneyness > 0.0) || !(ttm > 0.0))
    raise(ErrorCode::ValidationError, "moneyness and ttm must be > 0");
  const int k = params.num_regimes;
  ConstancyTable out;
  out.spots.assign(spots.begin(), spots.end());
  out.iv.assign(static_cast<size_t>(k), std::vector<double>(spots.size(), 0.0));

  IVSeries series;
  series.kind = IVKind::FixedContract;
  const double r = params.interest_rate;
  for (size_t j = 0; j < spots.size(); ++j) {
    const double s = spots[j];
    Contract contract;
    contract.strike = moneyness * s;
    contract.maturity = ttm;
    Grid grid = base_grid;
    grid.maturity = ttm;
    const PriceSurface surf = solve_surface(params, contract, grid, opts);
    for (int i = 1; i <= k; ++i) {
      const double price = price_at(surf, 0.0, s, i);
      const double iv = implied_vol(IVQuery{s, price, contract.strike, ttm, r});
      out.iv[static_cast<size_t>(i) - 1][j] = iv;
      series.times.push_back(static_cast<double>(series.size()));
      series.iv.push_back(iv);
      series.spot.push_back(s);
      series.strike_used.push_back(contract.strike);
      series.ttm_used.push_back(ttm);
      series.regime_true.push_back(i);
    }
  }
  out.ebar = mean_iv_by_state(series, nullptr, k).ebar;
  return out;
}

std::string to_csv(const IVSeries& series) {
  const bool with_truth = series.regime_true.size() == series.size();
  std::vector<std::string> header{"t", "spot", "strike_used", "ttm_used", "iv"};
  if (with_truth) header.insert(header.end() - 1, "regime_true");
  CsvBuilder csv(header);
  for (size_t j = 0; j < series.size(); ++j) {
    csv.cell(series.times[j]).cell(series.spot[j]).cell(series.strike_used[j]).cell(
        series.ttm_used[j]);
    if (with_truth) csv.cell(series.regime_true[j]);
    csv.cell(series.iv[j]).endrow();
  }
  return csv.str();
}

}  // namespace mmgbm
