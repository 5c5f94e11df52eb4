#include "mmgbm/smile.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mmgbm/csv.hpp"

namespace mmgbm {

SmileCurve smile_sweep(const ModelParams& params, double spot, double ttm,
                       std::span<const double> strikes, const Grid& base_grid,
                       const SolveOptions& opts) {
  if (!(spot > 0.0)) raise(ErrorCode::ValidationError, "spot must be > 0");
  for (size_t j = 0; j < strikes.size(); ++j) {
    if (!(strikes[j] > 0.0)) raise(ErrorCode::ValidationError, "strikes must be > 0");
    if (j > 0 && !(strikes[j] > strikes[j - 1]))
      raise(ErrorCode::ValidationError, "strikes must be strictly increasing");
  }

  SmileCurve curve;
  curve.spot = spot;
  curve.ttm = ttm;
  curve.strikes.assign(strikes.begin(), strikes.end());
  curve.iv.assign(params.num_regimes, {});
  if (strikes.empty()) return curve;

  Contract unit;
  unit.strike = 1.0;
  unit.maturity = ttm;
  const Grid g = grid_for_horizon(params, ttm, base_grid);
  const PriceSurface surf = solve_surface(params, unit, g, opts);

  const double r = params.interest_rate;
  for (int i = 1; i <= params.num_regimes; ++i) {
    auto& row = curve.iv[static_cast<size_t>(i) - 1];
    row.reserve(strikes.size());
    for (double strike : strikes) {
      const double option_price = strike * price_at(surf, 0.0, spot / strike, i);
      row.push_back(implied_vol(IVQuery{spot, option_price, strike, ttm, r}));
    }
  }
  return curve;
}

SmileFit fit_quadratic(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) raise(ErrorCode::ValidationError, "x and y must be aligned");
  std::set<double> distinct(x.begin(), x.end());
  if (distinct.size() < 3)
    raise(ErrorCode::RankDeficient, "need at least 3 distinct abscissae for a quadratic fit");

  // normal equations for (a0, a1, a2) against columns (1, x, x^2)
  double s[5] = {0, 0, 0, 0, 0};
  double t[3] = {0, 0, 0};
  for (size_t j = 0; j < x.size(); ++j) {
    double p = 1.0;
    for (int d = 0; d <= 4; ++d) {
      s[d] += p;
      if (d < 3) t[d] += p * y[j];
      p *= x[j];
    }
  }
  double A[3][4] = {{s[0], s[1], s[2], t[0]}, {s[1], s[2], s[3], t[1]}, {s[2], s[3], s[4], t[2]}};
  // Gaussian elimination with partial pivoting; 3x3, benign for strike grids
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int rr = c + 1; rr < 3; ++rr)
      if (std::abs(A[rr][c]) > std::abs(A[piv][c])) piv = rr;
    std::swap(A[c], A[piv]);
    if (A[c][c] == 0.0) raise(ErrorCode::RankDeficient, "singular normal equations");
    for (int rr = 0; rr < 3; ++rr) {
      if (rr == c) continue;
      const double f = A[rr][c] / A[c][c];
      for (int cc = c; cc < 4; ++cc) A[rr][cc] -= f * A[c][cc];
    }
  }
  SmileFit fit;
  fit.a0 = A[0][3] / A[0][0];
  fit.a1 = A[1][3] / A[1][1];
  fit.a2 = A[2][3] / A[2][2];
  double rss = 0.0;
  for (size_t j = 0; j < x.size(); ++j) {
    const double resid = y[j] - (fit.a2 * x[j] * x[j] + fit.a1 * x[j] + fit.a0);
    rss += resid * resid;
  }
  fit.residual = std::sqrt(rss);
  return fit;
}

std::vector<SmileFit> fit_smile(const SmileCurve& curve) {
  std::vector<SmileFit> fits;
  fits.reserve(curve.iv.size());
  for (const auto& row : curve.iv) fits.push_back(fit_quadratic(curve.strikes, row));
  return fits;
}

std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    raise(ErrorCode::ValidationError, "need two aligned points for a line fit");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t j = 0; j < x.size(); ++j) {
    sx += x[j];
    sy += y[j];
    sxx += x[j] * x[j];
    sxy += x[j] * y[j];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) raise(ErrorCode::RankDeficient, "degenerate abscissae");
  const double slope = (n * sxy - sx * sy) / denom;
  return {slope, (sy - slope * sx) / n};
}

TtmTable ttm_sweep(const ModelParams& params, double spot, double moneyness,
                   std::span<const double> ttm_list, const Grid& base_grid,
                   const SolveOptions& opts) {
  for (size_t j = 0; j < ttm_list.size(); ++j) {
    if (!(ttm_list[j] > 0.0)) raise(ErrorCode::ValidationError, "ttm values must be > 0");
    if (j > 0 && !(ttm_list[j] > ttm_list[j - 1]))
      raise(ErrorCode::ValidationError, "ttm values must be strictly increasing");
  }
  TtmTable table;
  table.ttm.assign(ttm_list.begin(), ttm_list.end());
  table.iv.assign(params.num_regimes, std::vector<double>(ttm_list.size(), 0.0));

  const double strike = moneyness * spot;
  const double r = params.interest_rate;
  for (size_t j = 0; j < ttm_list.size(); ++j) {
    Contract unit;
    unit.strike = 1.0;
    unit.maturity = ttm_list[j];
    const Grid g = grid_for_horizon(params, ttm_list[j], base_grid);
    const PriceSurface surf = solve_surface(params, unit, g, opts);
    for (int i = 1; i <= params.num_regimes; ++i) {
      const double option_price = strike * price_at(surf, 0.0, spot / strike, i);
      table.iv[static_cast<size_t>(i) - 1][j] =
          implied_vol(IVQuery{spot, option_price, strike, ttm_list[j], r});
    }
  }
  return table;
}

std::vector<SweepCase> enumerate_sweep_cases(const SweepSpec& spec) {
  const size_t sig_combos = 1u << 3;
  const size_t lam_combos = 1u << 3;
  std::vector<SweepCase> cases;
  int case_id = 0;
  for (size_t sc = 0; sc < sig_combos; ++sc) {
    // all-sigma-equal combinations reduce to flat-smile models and are skipped
    if (sc == 0 || sc == sig_combos - 1) continue;
    for (size_t lc = 0; lc < lam_combos; ++lc) {
      for (double r : spec.r_values) {
        SweepCase c;
        c.case_id = case_id++;
        c.r = r;
        for (int i = 0; i < 3; ++i) {
          c.sigma.push_back(spec.sigma_values[(sc >> i) & 1u]);
          c.lambda.push_back(spec.lambda_values[(lc >> i) & 1u]);
        }
        cases.push_back(std::move(c));
      }
    }
  }
  return cases;
}

std::vector<SweepCaseResult> parameter_sweep(const SweepSpec& spec, const SolveOptions& opts) {
  std::vector<SweepCase> cases = enumerate_sweep_cases(spec);
  if (!spec.case_filter.empty()) {
    std::vector<SweepCase> picked;
    for (int id : spec.case_filter)
      for (const auto& c : cases)
        if (c.case_id == id) picked.push_back(c);
    cases = std::move(picked);
  }

  std::vector<double> strikes;
  for (double strike = spec.strike_lo; strike <= spec.strike_hi + 1e-12;
       strike += spec.strike_step)
    strikes.push_back(strike);

  std::vector<SweepCaseResult> results(cases.size());
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
  for (long idx = 0; idx < static_cast<long>(cases.size()); ++idx) {
    const SweepCase& c = cases[static_cast<size_t>(idx)];
    SweepCaseResult& res = results[static_cast<size_t>(idx)];
    res.c = c;
    try {
      ModelParams params;
      params.num_regimes = 3;
      params.interest_rate = c.r;
      params.volatility = c.sigma;
      params.rate_matrix.assign(9, 0.0);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          if (i == j) continue;
          params.rate_matrix[static_cast<size_t>(i) * 3 + j] =
              c.lambda[static_cast<size_t>(i)] * spec.jump_matrix[static_cast<size_t>(i) * 3 + j];
        }
        params.rate_matrix[static_cast<size_t>(i) * 3 + i] = -c.lambda[static_cast<size_t>(i)];
      }
      params = validate(std::move(params));
      Grid grid = spec.grid;
      grid.maturity = spec.ttm;
      const SmileCurve curve = smile_sweep(params, spec.spot, spec.ttm, strikes, grid, opts);
      res.fits = fit_smile(curve);
    } catch (const std::exception& e) {
      res.error = e.what();
    }
  }
  return results;
}

std::string to_csv(const std::vector<SweepCaseResult>& results) {
  CsvBuilder csv({"case_id", "regime", "a2", "a1", "a0", "residual"});
  for (const auto& res : results) {
    for (size_t i = 0; i < res.fits.size(); ++i) {
      csv.cell(res.c.case_id)
          .cell(static_cast<int>(i + 1))
          .cell(res.fits[i].a2)
          .cell(res.fits[i].a1)
          .cell(res.fits[i].a0)
          .cell(res.fits[i].residual)
          .endrow();
    }
  }
  return csv.str();
}

}  // namespace mmgbm
