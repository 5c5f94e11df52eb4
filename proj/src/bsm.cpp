#include "mmgbm/bsm.hpp"

#include <cmath>
#include <numbers>

namespace mmgbm {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double bsm_price(const BsmInputs& in) {
  if (in.ttm <= 0.0) return std::max(in.spot - in.strike, 0.0);
  if (in.vol <= 0.0)
    return std::max(in.spot - in.strike * std::exp(-in.rate * in.ttm), 0.0);
  const double vol_sqrt_t = in.vol * std::sqrt(in.ttm);
  const double d1 =
      (std::log(in.spot / in.strike) + (in.rate + 0.5 * in.vol * in.vol) * in.ttm) / vol_sqrt_t;
  const double d2 = d1 - vol_sqrt_t;
  return norm_cdf(d1) * in.spot - in.strike * std::exp(-in.rate * in.ttm) * norm_cdf(d2);
}

double bsm_price(double spot, double strike, double rate, double vol, double ttm) {
  return bsm_price(BsmInputs{spot, strike, ttm, rate, vol});
}

double bsm_vega(const BsmInputs& in) {
  const double sqrt_t = std::sqrt(in.ttm);
  const double d1 =
      (std::log(in.spot / in.strike) + (in.rate + 0.5 * in.vol * in.vol) * in.ttm) /
      (in.vol * sqrt_t);
  return in.spot * norm_pdf(d1) * sqrt_t;
}

double lognormal_pdf(double x, double s, double sigma, double v, double rate) {
  const double sv = sigma * std::sqrt(v);
  const double z = (std::log(x / s) - (rate - 0.5 * sigma * sigma) * v) / sv;
  return std::exp(-0.5 * z * z) * kInvSqrt2Pi / (sv * x);
}

double lognormal_pdf(double x, double s, int regime, double v, const ModelParams& params) {
  return lognormal_pdf(x, s, params.sigma(regime - 1), v, params.interest_rate);
}

double truncation_cdf(double bound, double s, double sigma, double v, double rate) {
  const double z = (std::log(bound / s) - (rate - 0.5 * sigma * sigma) * v) / (sigma * std::sqrt(v));
  return norm_cdf(z);
}

double truncation_cdf(double bound, double s, int regime, double v, const ModelParams& params) {
  return truncation_cdf(bound, s, params.sigma(regime - 1), v, params.interest_rate);
}

double asymptotic_slope_gap(double t, const Contract& contract, double rate) {
  return contract.strike * std::exp(-rate * (contract.maturity - t));
}

}  // namespace mmgbm
