#pragma once

#include "mmgbm/model.hpp"

namespace mmgbm {

double norm_cdf(double x);
double norm_pdf(double x);

struct BsmInputs {
  double spot;
  double strike;
  double ttm;   // years
  double rate;
  double vol;
};

// Call price Phi(d1) s - K e^{-r tau} Phi(d2). The degenerate limits
// (tau = 0 or vol = 0) are returned exactly instead of through the formula.
double bsm_price(const BsmInputs& in);
double bsm_price(double spot, double strike, double rate, double vol, double ttm);

// dC/dsigma = s phi(d1) sqrt(tau); requires vol > 0, ttm > 0.
double bsm_vega(const BsmInputs& in);

// Transition density of the risk-neutral regime-frozen asset:
// Lognormal(ln s + (r - sigma_i^2/2) v, sigma_i^2 v) evaluated at x.
double lognormal_pdf(double x, double s, double sigma, double v, double rate);
double lognormal_pdf(double x, double s, int regime, double v, const ModelParams& params);

// F(bound; s, i, v): probability that the frozen-regime asset stays below
// `bound` after elapsed time v.
double truncation_cdf(double bound, double s, double sigma, double v, double rate);
double truncation_cdf(double bound, double s, int regime, double v, const ModelParams& params);

// lim_{s->inf} (s - price) = K e^{-r (T - t)}; values the far-field part of
// the truncated pricing equation.
double asymptotic_slope_gap(double t, const Contract& contract, double rate);

}  // namespace mmgbm
