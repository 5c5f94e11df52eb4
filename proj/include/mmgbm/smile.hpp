#pragma once

#include <span>
#include <string>
#include <vector>

#include "mmgbm/iv.hpp"
#include "mmgbm/model.hpp"
#include "mmgbm/pricer.hpp"

namespace mmgbm {

struct SmileCurve {
  std::vector<double> strikes;          // ascending
  std::vector<std::vector<double>> iv;  // [regime-1][strike index]
  double spot = 1.0;
  double ttm = 0.1;
};

// Least-squares quadratic iv ~ a2 K^2 + a1 K + a0; a2 is the smile coefficient.
struct SmileFit {
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;
  double residual = 0.0;  // 2-norm of the fit residuals
};

// Per-regime IV at each strike, priced at s = spot with time to maturity ttm.
SmileCurve smile_sweep(const ModelParams& params, double spot, double ttm,
                       std::span<const double> strikes, const Grid& base_grid,
                       const SolveOptions& opts = {});

// Ordinary least squares through the 3x3 normal equations; needs >= 3
// distinct strikes (RankDeficient otherwise).
std::vector<SmileFit> fit_smile(const SmileCurve& curve);
SmileFit fit_quadratic(std::span<const double> x, std::span<const double> y);

// slope/intercept of the least-squares line
std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y);

struct TtmTable {
  std::vector<double> ttm;              // years, ascending
  std::vector<std::vector<double>> iv;  // [regime-1][ttm index]
};

// Per-regime IV of the contract with strike moneyness * spot across TTMs.
TtmTable ttm_sweep(const ModelParams& params, double spot, double moneyness,
                   std::span<const double> ttm_list, const Grid& base_grid,
                   const SolveOptions& opts = {});

// The 96-combination experiment: extreme values of r, per-regime sigma and
// exit rates under a fixed jump chain, skipping the all-equal-sigma
// combinations (those are flat-smile models). Cases are ordered so that
// consecutive ids differ only in r.
struct SweepSpec {
  std::vector<double> r_values{0.01, 0.1};
  std::vector<double> sigma_values{0.1, 0.5};
  std::vector<double> lambda_values{0.5, 3.0};
  std::vector<double> jump_matrix{0.0, 2.0 / 3.0, 1.0 / 3.0,
                                  0.5, 0.0,       0.5,
                                  1.0 / 3.0, 2.0 / 3.0, 0.0};
  double spot = 1.0;
  double ttm = 0.1;
  double strike_lo = 0.8;
  double strike_hi = 1.2;
  double strike_step = 0.02;
  Grid grid{26, 200, 1.5, 0.1};
  std::vector<int> case_filter;  // run only these case ids when non-empty
};

struct SweepCase {
  int case_id = 0;
  double r = 0.0;
  std::vector<double> sigma;
  std::vector<double> lambda;
};

struct SweepCaseResult {
  SweepCase c;
  std::vector<SmileFit> fits;  // per regime; empty when the case failed
  std::string error;           // non-empty when the case failed
};

std::vector<SweepCase> enumerate_sweep_cases(const SweepSpec& spec);
std::vector<SweepCaseResult> parameter_sweep(const SweepSpec& spec, const SolveOptions& opts = {});

std::string to_csv(const std::vector<SweepCaseResult>& results);

}  // namespace mmgbm
