#include <algorithm>
#include <cmath>

#include "mmgbm/pricer.hpp"

namespace mmgbm {

// Direct transliteration of the marching scheme, kept as the reference the
// optimized solver is tested against. Single threaded, no kernel caching, no
// compensated sums; quadratic cost in both grid sizes.
PriceSurface solve_surface_reference(const ModelParams& params, const Contract& contract,
                                     const Grid& grid) {
  if (!params.validated) raise(ErrorCode::ValidationError, "params must be validated");
  validate(grid, contract);
  const StabilityReport stab = stability_check(params, grid);
  if (!stab.pass) raise(ErrorCode::StabilityViolation, "dt exceeds the stability bound");

  const int k = params.num_regimes;
  const int N = grid.n_time;
  const int M0 = grid.n_space;
  const double dt = grid.dt();
  const double ds = grid.ds();
  const double K = contract.strike;
  const double r = params.interest_rate;
  const double M = grid.space_bound;
  const WeightMatrix W = build_weights(N);

  PriceSurface surf;
  surf.model = params;
  surf.contract = contract;
  surf.grid = grid;
  surf.n_levels = N;
  surf.n_nodes = M0;
  surf.n_regimes = k;
  surf.dt = dt;
  surf.ds = ds;
  surf.values.assign(static_cast<size_t>(N + 1) * (M0 + 1) * k, 0.0);

  auto phi = [&](int n, int m, int i) -> double& {
    return surf.values[(static_cast<size_t>(n) * (M0 + 1) + m) * k + i];
  };
  auto wbar = [&](int m0) {
    return m0 == M0 ? 1.0 / 3.0 : (m0 % 2 == 1 ? 4.0 / 3.0 : 2.0 / 3.0);
  };

  for (int m = 0; m <= M0; ++m)
    for (int i = 0; i < k; ++i) phi(0, m, i) = std::max(m * ds - K, 0.0);

  std::vector<double> xi(k), cur(k), nxt(k);
  for (int n = 1; n <= N; ++n) {
    const std::vector<double>& wn = W.row(n);
    for (int m = 1; m <= M0; ++m) {
      const double s = m * ds;
      for (int i = 0; i < k; ++i) {
        const double lam = params.lambda(i);
        const double ci = bsm_price(s, K, r, params.sigma(i), n * dt);
        double val = s - std::exp(-lam * n * dt) * (s - ci);
        if (lam > 0.0) {
          double tail = 0.0;
          for (int l = 1; l <= n; ++l)
            tail += wn[l] * std::exp(-lam * l * dt) *
                    (1.0 - truncation_cdf(M, s, i + 1, l * dt, params));
          val -= K * std::exp(-r * n * dt) * lam * dt * tail;
          val -= lam * dt * wn[0] * s;
          double hist = 0.0;
          for (int l = 1; l <= n; ++l) {
            double coupled = 0.0;
            for (int j = 0; j < k; ++j) {
              if (j == i) continue;
              double inner = 0.0;
              for (int m0 = 1; m0 <= M0; ++m0)
                inner += wbar(m0) * (m0 * ds - phi(n - l, m0, j)) *
                         lognormal_pdf(m0 * ds, s, i + 1, l * dt, params) * ds;
              coupled += params.p(i, j) * inner;
            }
            hist += wn[l] * std::exp(-l * (lam + r) * dt) * coupled;
          }
          val -= lam * dt * hist;
        }
        xi[i] = val;
      }
      for (int i = 0; i < k; ++i) cur[i] = phi(n - 1, m, i);
      bool converged = false;
      for (int it = 0; it < 200; ++it) {
        double max_diff = 0.0;
        for (int i = 0; i < k; ++i) {
          double coup = 0.0;
          for (int j = 0; j < k; ++j)
            if (j != i) coup += params.p(i, j) * cur[j];
          nxt[i] = std::max(0.0, xi[i] + params.lambda(i) * dt * wn[0] * coup);
          max_diff = std::max(max_diff, std::abs(nxt[i] - cur[i]));
        }
        std::swap(cur, nxt);
        if (max_diff <= 1e-12) {
          converged = true;
          break;
        }
      }
      if (!converged)
        raise(ErrorCode::FixedPointDivergence, "reference solve failed to converge");
      for (int i = 0; i < k; ++i) phi(n, m, i) = cur[i];
    }
  }
  return surf;
}

}  // namespace mmgbm
