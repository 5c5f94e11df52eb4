#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "mmgbm/iv.hpp"
#include "mmgbm/rng.hpp"

using namespace mmgbm;

TEST_CASE("implied vol round trip at a single point") {
  const double price = bsm_price(1.0, 1.05, 0.05, 0.3, 0.25);
  const double iv = implied_vol(IVQuery{1.0, price, 1.05, 0.25, 0.05});
  CHECK(std::abs(iv - 0.3) <= 1e-8);
}

TEST_CASE("implied vol round trip on a randomized grid") {
  Rng64 rng(55);
  double worst = 0.0;
  int skipped = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double spot = 1.0;
    const double moneyness = 0.5 + 1.5 * rng.uniform01();
    const double tau = 0.01 + 1.99 * rng.uniform01();
    const double vol = 0.05 + 1.95 * rng.uniform01();
    const double r = 0.1 * rng.uniform01();
    const double price = bsm_price(spot, moneyness * spot, r, vol, tau);
    // deep-ITM/OTM corners where the price pins to the interval boundary or
    // the Vega drops below 1e-6 carry no recoverable vol information at the
    // 1e-10 price tolerance; those draws violate the query invariant in
    // double precision
    const double intrinsic = std::max(spot - moneyness * spot * std::exp(-r * tau), 0.0);
    const double vega = bsm_vega(BsmInputs{spot, moneyness * spot, tau, r, vol});
    if (price <= intrinsic || price >= spot || vega < 1e-6) {
      ++skipped;
      continue;
    }
    const double iv = implied_vol(IVQuery{spot, price, moneyness * spot, tau, r});
    worst = std::max(worst, std::abs(iv - vol));
  }
  CHECK(worst <= 1e-8);
  CHECK(skipped <= 60);
}

TEST_CASE("arbitrage prices are rejected with the right classes") {
  try {
    implied_vol(IVQuery{1.0, 1.0, 1.0, 0.1, 0.05});  // price >= spot
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PriceAboveSpot);
  }
  const double intrinsic = 1.0 - 0.9 * std::exp(-0.05 * 0.1);
  try {
    implied_vol(IVQuery{1.0, intrinsic * 0.999, 0.9, 0.1, 0.05});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PriceBelowIntrinsic);
  }
  try {
    implied_vol(IVQuery{1.0, intrinsic, 0.9, 0.1, 0.05});  // boundary counts as arbitrage
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PriceBelowIntrinsic);
  }
}

TEST_CASE("prices outside the vol bracket do not converge") {
  // an option worth more than the vol = 5 price needs a wider cap
  const double too_high = bsm_price(1.0, 1.0, 0.05, 6.0, 0.5);
  try {
    implied_vol(IVQuery{1.0, too_high, 1.0, 0.5, 0.05});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }
}

TEST_CASE("round half down: ties go to the smaller integer") {
  CHECK(round_half_down(1.5) == 1.0);
  CHECK(round_half_down(2.5) == 2.0);
  CHECK(round_half_down(2.51) == 3.0);
  CHECK(round_half_down(2.49) == 2.0);
  CHECK(round_half_down(-0.5) == -1.0);
  CHECK(round_half_down(0.5) == 0.0);
  CHECK(round_half_down(100.5) == 100.0);
}

TEST_CASE("equal volatilities collapse the regime price to the closed form") {
  // all regimes share sigma: the coupled equation's unique solution is the
  // one-regime price, so inversion must return that sigma
  ModelParams p;
  p.num_regimes = 3;
  p.rate_matrix = {-10.0, 20.0 / 3.0, 10.0 / 3.0, 10.0, -20.0, 10.0,
                   10.0 / 3.0, 20.0 / 3.0, -10.0};
  p.volatility = {0.3, 0.3, 0.3};
  p.interest_rate = 0.05;
  p = validate(std::move(p));
  const PriceSurface surf =
      solve_surface(p, fixtures::unit_contract(), fixtures::example_grid(51, 400));
  for (int i = 1; i <= 3; ++i) {
    const double price = price_at(surf, 0.0, 1.0, i);
    const double iv = implied_vol(IVQuery{1.0, price, 1.0, 0.1, 0.05});
    CHECK(std::abs(iv - 0.3) <= 2e-3);  // limited by the scheme's grid error
  }
}

namespace {

struct SeriesInputs {
  RegimePath path;
  std::vector<double> times;
  std::vector<double> spots;
};

SeriesInputs synthetic_inputs() {
  SeriesInputs in;
  in.path.times = {0.0, 0.0135, 0.052, 0.0761};
  in.path.states = {1, 2, 3, 1};
  in.path.horizon = 0.2;
  for (int j = 0; j <= 40; ++j) {
    in.times.push_back(j * 0.004);
    in.spots.push_back(1.0 + 0.002 * j + 0.05 * std::sin(0.7 * j));
  }
  return in;
}

}  // namespace

TEST_CASE("fixed contract series: flat when nothing switches") {
  const ModelParams p = fixtures::bsm_model(0.25);
  SeriesInputs in = synthetic_inputs();
  in.path.times = {0.0};
  in.path.states = {2};
  const IVSeries series =
      iv_process_fixed(p, 1.0, 0.1, in.path, in.times, in.spots, fixtures::example_grid(26, 200));
  REQUIRE(series.size() == in.times.size());
  // exactly constant (same normalized contract at every instant), and at the
  // single-regime vol up to the grid interpolation error
  for (double iv : series.iv) {
    CHECK(std::abs(iv - series.iv.front()) <= 1e-12);
    CHECK(std::abs(iv - 0.25) <= 1e-3);
  }
}

TEST_CASE("fixed contract series is piecewise constant and jumps with the chain") {
  const ModelParams p = fixtures::example_model();
  const SeriesInputs in = synthetic_inputs();
  const IVSeries series =
      iv_process_fixed(p, 1.0, 0.1, in.path, in.times, in.spots, fixtures::example_grid(51, 200));
  REQUIRE(series.size() == in.times.size());

  // segment the observations by the true regime and check constancy per regime
  std::set<double> level_of_regime[4];
  for (size_t j = 0; j < series.size(); ++j) {
    const int regime = state_at(in.path, in.times[j]);
    level_of_regime[regime].insert(series.iv[j]);
    CHECK(series.regime_true[j] == regime);
  }
  for (int regime = 1; regime <= 3; ++regime) {
    REQUIRE(!level_of_regime[regime].empty());
    const double lo = *level_of_regime[regime].begin();
    const double hi = *level_of_regime[regime].rbegin();
    CHECK(hi - lo <= 1e-3);  // pure-jump process: constant between transitions
  }
  // jumps happen exactly when the sampled regime changes
  for (size_t j = 1; j < series.size(); ++j) {
    const bool regime_changed = series.regime_true[j] != series.regime_true[j - 1];
    const bool iv_moved = std::abs(series.iv[j] - series.iv[j - 1]) > 1e-6;
    CHECK(regime_changed == iv_moved);
  }
}

TEST_CASE("per-regime fixed-contract levels are separated (injectivity premise)") {
  const ModelParams p = fixtures::example_model();
  RegimePath path;
  path.times = {0.0, 0.01, 0.02};
  path.states = {1, 2, 3};
  path.horizon = 0.03;
  const std::vector<double> times{0.0, 0.01, 0.02};
  const std::vector<double> spots{1.0, 1.0, 1.0};
  const IVSeries series =
      iv_process_fixed(p, 1.0, 0.1, path, times, spots, fixtures::example_grid(51, 400));
  REQUIRE(series.size() == 3);
  CHECK(series.iv[1] - series.iv[0] > 0.02);
  CHECK(series.iv[2] - series.iv[1] > 0.02);
}

TEST_CASE("rounded contracts cycle the TTM between expiries") {
  const ModelParams p = fixtures::example_model(0.0);
  const long steps = 45;
  const double h = 1.0 / 250.0;
  RegimePath path;
  path.times = {0.0};
  path.states = {1};
  path.horizon = steps * h;
  std::vector<double> times, spots;
  for (long j = 0; j <= steps; ++j) {
    times.push_back(j * h);
    spots.push_back(1.0);
  }
  const IVSeries series = iv_process_rounded(p, 1.0, 0.12, 0.01, 0.08, path, times, spots,
                                             fixtures::example_grid(51, 200));
  REQUIRE(series.size() == times.size());
  // independent reconstruction of the documented day cycle
  for (size_t j = 0; j < series.size(); ++j) {
    const double expiry = round_half_down((times[j] + 0.12) / 0.08) * 0.08;
    CHECK(series.ttm_used[j] == doctest::Approx(expiry - times[j]).epsilon(1e-12));
  }
  // day 1 has 39 trading days to expiry, day 20 has 20, day 21 is 39 again
  CHECK(std::llround(series.ttm_used[1] * 250) == 39);
  CHECK(std::llround(series.ttm_used[20] * 250) == 20);
  CHECK(std::llround(series.ttm_used[21] * 250) == 39);
  CHECK(std::llround(series.ttm_used[40] * 250) == 20);
  // a level shift right after the expiry date even though the regime is fixed
  CHECK(std::abs(series.iv[21] - series.iv[20]) > 1e-4);
}

TEST_CASE("rounded strikes snap half-down to the strike step") {
  const ModelParams p = fixtures::example_model();
  RegimePath path;
  path.times = {0.0};
  path.states = {1};
  path.horizon = 1.0;
  const std::vector<double> times{0.0, 0.004, 0.008};
  const std::vector<double> spots{1.005, 1.0049, 1.0051};
  const IVSeries series = iv_process_rounded(p, 1.0, 0.12, 0.01, 0.08, path, times, spots,
                                             fixtures::example_grid(51, 200));
  CHECK(series.strike_used[0] == doctest::Approx(1.00).epsilon(1e-12));  // tie goes down
  CHECK(series.strike_used[1] == doctest::Approx(1.00).epsilon(1e-12));
  CHECK(series.strike_used[2] == doctest::Approx(1.01).epsilon(1e-12));
}

TEST_CASE("rounded mode rejects an unreachable expiry spacing") {
  const ModelParams p = fixtures::example_model();
  RegimePath path;
  path.times = {0.0};
  path.states = {1};
  path.horizon = 1.0;
  const std::vector<double> times{0.0};
  const std::vector<double> spots{1.0};
  CHECK_THROWS_AS(iv_process_rounded(p, 1.0, 0.03, 0.01, 0.08, path, times, spots,
                                     fixtures::example_grid(51, 200)),
                  Error);
}

TEST_CASE("empty sampling produces an empty series") {
  const ModelParams p = fixtures::example_model();
  RegimePath path;
  path.times = {0.0};
  path.states = {1};
  path.horizon = 1.0;
  const IVSeries series =
      iv_process_fixed(p, 1.0, 0.1, path, {}, {}, fixtures::example_grid(51, 200));
  CHECK(series.size() == 0);
}

TEST_CASE("mean_iv_by_state: constant series has zero spread") {
  IVSeries series;
  series.times = {0.0, 1.0, 2.0, 3.0};
  series.iv = {0.3, 0.3, 0.3, 0.3};
  series.spot = {0.9, 0.9, 1.1, 1.1};
  series.strike_used = {0.9, 0.9, 1.1, 1.1};
  series.ttm_used = {0.1, 0.1, 0.1, 0.1};
  series.regime_true = {1, 1, 1, 1};
  const MeanIVByState out = mean_iv_by_state(series, nullptr, 3);
  CHECK(out.ebar[0] == 0.0);
  CHECK(std::isnan(out.ebar[1]));
  CHECK(out.max_ebar() == 0.0);
}

TEST_CASE("mean_iv_by_state: single observation per bucket is well-defined") {
  IVSeries series;
  series.times = {0.0, 1.0};
  series.iv = {0.30, 0.31};
  series.spot = {0.9, 1.1};
  series.strike_used = {0.9, 1.1};
  series.ttm_used = {0.1, 0.1};
  series.regime_true = {2, 2};
  const MeanIVByState out = mean_iv_by_state(series, nullptr, 3);
  CHECK(out.table[1].size() == 2);
  CHECK(out.ebar[1] == doctest::Approx((0.31 - 0.30) / 0.30).epsilon(1e-12));
}

TEST_CASE("mean_iv_by_state rejects an empty series") {
  IVSeries series;
  try {
    mean_iv_by_state(series, nullptr, 3);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyBucket);
  }
}

TEST_CASE("iv series csv carries the documented columns") {
  IVSeries series;
  series.times = {0.0};
  series.iv = {0.25};
  series.spot = {1.0};
  series.strike_used = {1.0};
  series.ttm_used = {0.1};
  series.regime_true = {2};
  CHECK(to_csv(series) == "t,spot,strike_used,ttm_used,regime_true,iv\n0,1,1,0.1,2,0.25\n");
}
