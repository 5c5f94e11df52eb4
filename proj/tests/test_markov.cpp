#include <cmath>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "mmgbm/markov.hpp"
#include "oracles.hpp"

using namespace mmgbm;

TEST_CASE("single absorbing state never transitions") {
  ModelParams p;
  p.num_regimes = 1;
  p.rate_matrix = {0.0};
  p.volatility = {0.2};
  p = validate(std::move(p));
  const RegimePath path = simulate_ctmc(p, 1, 1000.0, 3);
  CHECK(path.segments() == 1);
  CHECK(state_at(path, 0.0) == 1);
  CHECK(state_at(path, 999.9) == 1);
}

TEST_CASE("zero exit rate freezes the chain once entered") {
  ModelParams p;
  p.num_regimes = 2;
  p.rate_matrix = {-5.0, 5.0, 0.0, 0.0};  // state 2 absorbing
  p.volatility = {0.2, 0.3};
  p = validate(std::move(p));
  const RegimePath path = simulate_ctmc(p, 1, 500.0, 11);
  CHECK(path.segments() == 2);  // one jump, then stuck
  CHECK(path.states.back() == 2);
  CHECK(state_at(path, 499.0) == 2);
}

TEST_CASE("state_at follows the right-continuous convention") {
  RegimePath path;
  path.times = {0.0, 1.0, 2.5};
  path.states = {1, 3, 2};
  path.horizon = 4.0;
  CHECK(state_at(path, 0.0) == 1);
  CHECK(state_at(path, 1.0 - 1e-12) == 1);
  CHECK(state_at(path, 1.0) == 3);  // new state exactly at the instant
  CHECK(state_at(path, 2.5) == 2);
  CHECK(state_at(path, 4.0) == 2);
  CHECK_THROWS_AS(state_at(path, -0.1), Error);
  CHECK_THROWS_AS(state_at(path, 4.1), Error);
}

TEST_CASE("mean holding time in state 2 matches 1/lambda_2") {
  const ModelParams p = fixtures::example_model();
  const RegimePath path = simulate_ctmc(p, 1, 1e4, 99);
  double total = 0.0;
  long visits = 0;
  for (size_t j = 0; j < path.segments(); ++j) {
    if (path.states[j] != 2) continue;
    const double end = j + 1 < path.times.size() ? path.times[j + 1] : path.horizon;
    total += end - path.times[j];
    visits += 1;
  }
  REQUIRE(visits > 1000);
  const double mean = total / static_cast<double>(visits);
  // holding ~ Exp(20): mean 1/20, sd 1/20
  const double se = (1.0 / 20.0) / std::sqrt(static_cast<double>(visits));
  CHECK(std::abs(mean - 1.0 / 20.0) < 3.0 * se);
}

TEST_CASE("empirical jump frequencies match the jump chain") {
  const ModelParams p = fixtures::example_model();
  const RegimePath path = simulate_ctmc(p, 1, 1e4, 123);
  std::map<std::pair<int, int>, long> counts;
  std::map<int, long> from;
  for (size_t j = 0; j + 1 < path.segments(); ++j) {
    counts[{path.states[j], path.states[j + 1]}] += 1;
    from[path.states[j]] += 1;
  }
  for (int i = 1; i <= 3; ++i) {
    REQUIRE(from[i] > 500);
    // chi-square against the jump-chain row, 1 dof for k = 3
    double chi2 = 0.0;
    for (int j = 1; j <= 3; ++j) {
      if (j == i) continue;
      const double expected = from[i] * p.p(i - 1, j - 1);
      const double observed = static_cast<double>(counts[{i, j}]);
      chi2 += (observed - expected) * (observed - expected) / expected;
    }
    CHECK(chi2 < 10.83);  // 99.9% quantile, 1 dof
  }
}

TEST_CASE("occupation fractions approach the stationary distribution") {
  const ModelParams p = fixtures::example_model();
  const std::vector<double> pi = oracles::stationary_distribution(p);
  CHECK(pi[0] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(pi[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(pi[2] == doctest::Approx(0.375).epsilon(1e-12));

  const RegimePath path = simulate_ctmc(p, 2, 2e4, 321);
  double occ[3] = {0, 0, 0};
  for (size_t j = 0; j < path.segments(); ++j) {
    const double end = j + 1 < path.times.size() ? path.times[j + 1] : path.horizon;
    occ[path.states[j] - 1] += end - path.times[j];
  }
  for (int i = 0; i < 3; ++i) CHECK(occ[i] / path.horizon == doctest::Approx(pi[i]).epsilon(0.03));
}

TEST_CASE("paths are reproducible from the seed") {
  const ModelParams p = fixtures::example_model();
  const RegimePath a = simulate_ctmc(p, 1, 50.0, 5);
  const RegimePath b = simulate_ctmc(p, 1, 50.0, 5);
  const RegimePath c = simulate_ctmc(p, 1, 50.0, 6);
  CHECK(a.times == b.times);
  CHECK(a.states == b.states);
  CHECK(a.times != c.times);
}

TEST_CASE("regime path csv has the documented columns") {
  RegimePath path;
  path.times = {0.0, 0.25};
  path.states = {2, 1};
  path.horizon = 1.0;
  CHECK(to_csv(path) == "t_start,state\n0,2\n0.25,1\n");
}
