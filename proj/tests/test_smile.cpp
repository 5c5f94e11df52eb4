#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mmgbm/smile.hpp"

using namespace mmgbm;

namespace {

std::vector<double> strike_range(double lo, double hi, double step) {
  std::vector<double> out;
  for (double k = lo; k <= hi + 1e-12; k += step) out.push_back(k);
  return out;
}

}  // namespace

TEST_CASE("no switching gives a flat smile") {
  const ModelParams p = fixtures::bsm_model(0.3);
  const auto strikes = strike_range(0.8, 1.2, 0.05);
  const SmileCurve curve =
      smile_sweep(p, 1.0, 0.1, strikes, fixtures::example_grid(31, 400));
  // flat up to the interpolation error of reading the surface off the grid;
  // the switching models curve two orders of magnitude more than this
  for (const auto& row : curve.iv)
    for (double iv : row) CHECK(std::abs(iv - 0.3) <= 5e-4);
  const auto fits = fit_smile(curve);
  for (const auto& f : fits) CHECK(std::abs(f.a2) <= 2e-2);
}

TEST_CASE("single strike produces a one-point curve") {
  const ModelParams p = fixtures::bsm_model(0.3);
  const std::vector<double> strikes{1.0};
  const SmileCurve curve =
      smile_sweep(p, 1.0, 0.1, strikes, fixtures::example_grid(31, 200));
  CHECK(curve.strikes.size() == 1);
  CHECK(curve.iv[0].size() == 1);
  CHECK_THROWS_AS(fit_smile(curve), Error);
}

TEST_CASE("quadratic data is fitted exactly") {
  std::vector<double> x, y;
  for (double k = 0.8; k <= 1.2 + 1e-12; k += 0.02) {
    x.push_back(k);
    y.push_back(1.7 * k * k - 3.1 * k + 1.9);
  }
  const SmileFit fit = fit_quadratic(x, y);
  CHECK(fit.a2 == doctest::Approx(1.7).epsilon(1e-10));
  CHECK(fit.a1 == doctest::Approx(-3.1).epsilon(1e-10));
  CHECK(fit.a0 == doctest::Approx(1.9).epsilon(1e-10));
  CHECK(fit.residual <= 1e-10);
}

TEST_CASE("flat data fits with zero curvature") {
  std::vector<double> x, y;
  for (double k = 0.8; k <= 1.2 + 1e-12; k += 0.02) {
    x.push_back(k);
    y.push_back(0.37);
  }
  const SmileFit fit = fit_quadratic(x, y);
  CHECK(std::abs(fit.a2) <= 1e-10);
  CHECK(fit.a0 == doctest::Approx(0.37).epsilon(1e-10));
}

TEST_CASE("least-squares residuals are orthogonal to the design columns") {
  std::vector<double> x, y;
  for (int j = 0; j < 21; ++j) {
    x.push_back(0.8 + 0.02 * j);
    y.push_back(0.2 + 0.1 * std::sin(3.0 * j) + 0.03 * j * j * 0.001);
  }
  const SmileFit fit = fit_quadratic(x, y);
  double d0 = 0, d1 = 0, d2 = 0;
  for (size_t j = 0; j < x.size(); ++j) {
    const double resid = y[j] - (fit.a2 * x[j] * x[j] + fit.a1 * x[j] + fit.a0);
    d0 += resid;
    d1 += resid * x[j];
    d2 += resid * x[j] * x[j];
  }
  CHECK(std::abs(d0) <= 1e-10);
  CHECK(std::abs(d1) <= 1e-10);
  CHECK(std::abs(d2) <= 1e-10);
}

TEST_CASE("fit_quadratic needs three distinct strikes") {
  const std::vector<double> x{1.0, 1.0, 1.0, 2.0};
  const std::vector<double> y{0.1, 0.2, 0.3, 0.4};
  try {
    fit_quadratic(x, y);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
}

TEST_CASE("the example model smiles upward in every regime") {
  const ModelParams p = fixtures::example_model();
  const auto strikes = strike_range(0.8, 1.2, 0.02);
  const SmileCurve curve =
      smile_sweep(p, 1.0, 0.1, strikes, fixtures::example_grid(26, 200));
  const auto fits = fit_smile(curve);
  REQUIRE(fits.size() == 3);
  for (const auto& f : fits) CHECK(f.a2 > 0.0);
  // flatter smile in the high-volatility regime
  CHECK(fits[0].a2 > fits[2].a2);
}

TEST_CASE("no switching keeps IV constant across TTM") {
  const ModelParams p = fixtures::bsm_model(0.3);
  const std::vector<double> ttms{10.0 / 250, 20.0 / 250, 30.0 / 250, 40.0 / 250, 50.0 / 250};
  const TtmTable table = ttm_sweep(p, 1.0, 1.0, ttms, fixtures::example_grid(26, 400));
  for (const auto& row : table.iv)
    for (double iv : row) CHECK(std::abs(iv - 0.3) <= 5e-4);
}

TEST_CASE("sweep enumeration: 96 cases, consecutive pairs differ only in r") {
  const SweepSpec spec;
  const auto cases = enumerate_sweep_cases(spec);
  REQUIRE(cases.size() == 96);
  for (size_t j = 0; j < cases.size(); ++j) CHECK(cases[j].case_id == static_cast<int>(j));
  for (size_t j = 0; j + 1 < cases.size(); j += 2) {
    CHECK(cases[j].sigma == cases[j + 1].sigma);
    CHECK(cases[j].lambda == cases[j + 1].lambda);
    CHECK(cases[j].r == 0.01);
    CHECK(cases[j + 1].r == 0.1);
  }
  // no all-equal-sigma case survives
  for (const auto& c : cases)
    CHECK_FALSE((c.sigma[0] == c.sigma[1] && c.sigma[1] == c.sigma[2]));
}

TEST_CASE("a stratified subset of the sweep smiles upward and is r-insensitive") {
  SweepSpec spec;
  spec.case_filter = {8, 9, 40, 41};
  const auto results = parameter_sweep(spec);
  REQUIRE(results.size() == 4);
  for (const auto& res : results) {
    REQUIRE(res.error.empty());
    REQUIRE(res.fits.size() == 3);
    for (const auto& f : res.fits) CHECK(f.a2 > 0.0);
  }
  // consecutive r-paired cases have close smile coefficients
  for (size_t pair = 0; pair < 4; pair += 2) {
    for (int i = 0; i < 3; ++i) {
      const double a = results[pair].fits[i].a2;
      const double b = results[pair + 1].fits[i].a2;
      CHECK(std::abs(a - b) / std::max(a, b) < 0.5);
    }
  }
}

TEST_CASE("empty sweep spec yields no results") {
  SweepSpec spec;
  spec.case_filter = {-1};
  CHECK(parameter_sweep(spec).empty());
}
