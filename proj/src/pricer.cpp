#include "mmgbm/pricer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmgbm/csv.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace mmgbm {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

WeightMatrix build_weights(int n_steps) {
  if (n_steps < 1) raise(ErrorCode::ValidationError, "need at least one time step");
  WeightMatrix w;
  w.rows.resize(static_cast<size_t>(n_steps));
  for (int n = 1; n <= n_steps; ++n) {
    std::vector<double>& row = w.rows[static_cast<size_t>(n) - 1];
    row.assign(static_cast<size_t>(n) + 1, 0.0);
    if (n == 1) {
      row[0] = row[1] = 0.5;
      continue;
    }
    const int simpson_end = (n % 2 == 0) ? n : n - 1;  // even interval count
    row[0] = 1.0 / 3.0;
    for (int l = 1; l < simpson_end; ++l) row[l] = (l % 2 == 1) ? 4.0 / 3.0 : 2.0 / 3.0;
    row[simpson_end] = 1.0 / 3.0;
    if (n % 2 == 1) {
      // trapezoid on the last interval
      row[n - 1] += 0.5;
      row[n] = 0.5;
    }
  }
  return w;
}

double kernel_G(int m, int m0, int l, int regime, const Grid& grid, const ModelParams& params) {
  if (l == 0) return m0 == m ? 1.0 / grid.ds() : 0.0;
  return lognormal_pdf(m0 * grid.ds(), m * grid.ds(), regime, l * grid.dt(), params);
}

StabilityReport stability_check(const ModelParams& params, const Grid& grid) {
  if (!params.validated) raise(ErrorCode::ValidationError, "params must be validated");
  StabilityReport rep;
  rep.max_exit_rate = params.max_exit_rate();
  rep.rate_matrix_norm = params.inf_norm();
  rep.dt = grid.dt();
  rep.note =
      "rate-matrix norm taken as the infinity norm (max absolute row sum); "
      "the row-wise coupling estimate makes this the conservative reading";
  if (rep.max_exit_rate == 0.0) {
    // no switching, no coupling term: unconditionally stable
    rep.b = 0.0;
    rep.dt_bound = std::numeric_limits<double>::infinity();
    rep.error_growth = 0.0;
    rep.pass = true;
    return rep;
  }
  const double denom = 1.0 - rep.dt * rep.rate_matrix_norm;
  if (denom <= 0.0)
    raise(ErrorCode::DegenerateDenominator,
          "dt * ||Lambda|| = " + fmt_double(rep.dt * rep.rate_matrix_norm) + " >= 1");
  rep.b = rep.max_exit_rate / denom;
  rep.dt_bound = std::exp(-rep.b * grid.maturity) / rep.b;
  rep.error_growth = std::exp(rep.b * grid.maturity) - 1.0;
  rep.pass = rep.dt <= rep.dt_bound;
  return rep;
}

double stable_dt_bound(const ModelParams& params, double maturity) {
  if (!params.validated) raise(ErrorCode::ValidationError, "params must be validated");
  const double a = params.max_exit_rate();
  if (a == 0.0) return std::numeric_limits<double>::infinity();
  const double norm = params.inf_norm();
  auto pass = [&](double dt) {
    const double denom = 1.0 - dt * norm;
    if (denom <= 0.0) return false;
    const double b = a / denom;
    return dt <= std::exp(-b * maturity) / b;
  };
  double lo = 1e-12;
  double hi = 0.999 / norm;
  if (!pass(lo)) return 0.0;
  if (pass(hi)) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (pass(mid) ? lo : hi) = mid;
  }
  return lo;
}

namespace {

// shared precomputed quantities for the march
struct SolverContext {
  int k, n_levels, n_nodes;
  double dt, ds, strike, rate, bound;
  std::vector<double> lam, sig;
  const double* jump;  // k x k
  WeightMatrix weights;
  std::vector<double> wbar;     // Simpson space weights, index 1..M0
  std::vector<double> logs;     // ln(m ds), index 1..M0
  std::vector<double> inv_x;    // 1/(m0 ds), index 1..M0
  double log_bound;
  // per (l, i), index (l-1)*k + i, l = 1..N
  std::vector<double> inv_sv;   // 1/(sigma_i sqrt(l dt))
  std::vector<double> drift_v;  // (r - sigma_i^2/2) l dt
  std::vector<double> pref;     // kInvSqrt2Pi * inv_sv
  std::vector<double> e_lam;    // exp(-lambda_i l dt), l = 0..N, index l*k + i
  std::vector<double> e_lamr;   // exp(-l (lambda_i + r) dt)
  std::vector<double> disc_strike;  // K exp(-r n dt), n = 0..N

  double alpha(int il, double log_m, int m0) const {
    const double z = (logs[m0] - log_m - drift_v[il]) * inv_sv[il];
    return std::exp(-0.5 * z * z) * pref[il] * inv_x[m0];
  }
};

SolverContext make_context(const ModelParams& params, const Contract& contract, const Grid& grid) {
  SolverContext ctx;
  ctx.k = params.num_regimes;
  ctx.n_levels = grid.n_time;
  ctx.n_nodes = grid.n_space;
  ctx.dt = grid.dt();
  ctx.ds = grid.ds();
  ctx.strike = contract.strike;
  ctx.rate = params.interest_rate;
  ctx.bound = grid.space_bound;
  ctx.lam = params.exit_rate;
  ctx.sig = params.volatility;
  ctx.jump = params.jump_prob.data();
  ctx.weights = build_weights(ctx.n_levels);

  const int M0 = ctx.n_nodes;
  ctx.wbar.assign(M0 + 1, 0.0);
  for (int m0 = 1; m0 <= M0; ++m0)
    ctx.wbar[m0] = (m0 == M0) ? 1.0 / 3.0 : (m0 % 2 == 1 ? 4.0 / 3.0 : 2.0 / 3.0);
  ctx.logs.assign(M0 + 1, 0.0);
  ctx.inv_x.assign(M0 + 1, 0.0);
  for (int m0 = 1; m0 <= M0; ++m0) {
    ctx.logs[m0] = std::log(m0 * ctx.ds);
    ctx.inv_x[m0] = 1.0 / (m0 * ctx.ds);
  }
  ctx.log_bound = std::log(ctx.bound);

  const int k = ctx.k;
  const int N = ctx.n_levels;
  ctx.inv_sv.assign(static_cast<size_t>(N) * k, 0.0);
  ctx.drift_v.assign(static_cast<size_t>(N) * k, 0.0);
  ctx.pref.assign(static_cast<size_t>(N) * k, 0.0);
  ctx.e_lamr.assign(static_cast<size_t>(N) * k, 0.0);
  ctx.e_lam.assign(static_cast<size_t>(N + 1) * k, 0.0);
  for (int i = 0; i < k; ++i) ctx.e_lam[i] = 1.0;
  for (int l = 1; l <= N; ++l) {
    const double v = l * ctx.dt;
    for (int i = 0; i < k; ++i) {
      const size_t il = static_cast<size_t>(l - 1) * k + i;
      ctx.inv_sv[il] = 1.0 / (ctx.sig[i] * std::sqrt(v));
      ctx.drift_v[il] = (ctx.rate - 0.5 * ctx.sig[i] * ctx.sig[i]) * v;
      ctx.pref[il] = kInvSqrt2Pi * ctx.inv_sv[il];
      ctx.e_lam[static_cast<size_t>(l) * k + i] = std::exp(-ctx.lam[i] * v);
      ctx.e_lamr[il] = std::exp(-(ctx.lam[i] + ctx.rate) * v);
    }
  }
  ctx.disc_strike.assign(N + 1, 0.0);
  for (int n = 0; n <= N; ++n)
    ctx.disc_strike[n] = ctx.strike * std::exp(-ctx.rate * (n * ctx.dt));
  return ctx;
}

// compensated (Kahan) accumulation of the space integral
inline double space_sum_table(const double* arow, const double* chi_row, const double* wbar,
                              int n_nodes) {
  double sum = 0.0, comp = 0.0;
  for (int m0 = 1; m0 <= n_nodes; ++m0) {
    const double term = wbar[m0] * chi_row[m0 - 1] * arow[m0 - 1];
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

inline double space_sum_fly(const SolverContext& ctx, int il, double log_m, const double* chi_row) {
  double sum = 0.0, comp = 0.0;
  for (int m0 = 1; m0 <= ctx.n_nodes; ++m0) {
    const double term = ctx.wbar[m0] * chi_row[m0 - 1] * ctx.alpha(il, log_m, m0);
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace

PriceSurface solve_surface(const ModelParams& params, const Contract& contract, const Grid& grid,
                           const SolveOptions& opts) {
  if (!params.validated) raise(ErrorCode::ValidationError, "params must be validated");
  validate(grid, contract);
  if (std::abs(grid.maturity - contract.maturity) > 1e-12)
    raise(ErrorCode::ValidationError, "grid maturity must match the contract maturity");
  const StabilityReport stab = stability_check(params, grid);
  if (!stab.pass)
    raise(ErrorCode::StabilityViolation, "dt = " + fmt_double(stab.dt) + " exceeds the bound " +
                                             fmt_double(stab.dt_bound));

  SolverContext ctx = make_context(params, contract, grid);
  const int k = ctx.k, N = ctx.n_levels, M0 = ctx.n_nodes;
  const bool par = opts.parallel;

  PriceSurface surf;
  surf.model = params;
  surf.contract = contract;
  surf.grid = grid;
  surf.n_levels = N;
  surf.n_nodes = M0;
  surf.n_regimes = k;
  surf.dt = ctx.dt;
  surf.ds = ctx.ds;
  surf.values.assign(static_cast<size_t>(N + 1) * (M0 + 1) * k, 0.0);
  double* phi = surf.values.data();
  const size_t level_stride = static_cast<size_t>(M0 + 1) * k;
  auto level_span = [&](int n) { return std::span<double>(phi + n * level_stride, level_stride); };

  // chi[q][i][m0] = sum_{j != i} p_ij (m0 ds - phi^q_{m0}(j))
  std::vector<double> chi(static_cast<size_t>(N + 1) * k * M0, 0.0);
  auto update_chi = [&](int q) {
    const double* lvl = phi + q * level_stride;
#pragma omp parallel for schedule(static) if (par)
    for (int m0 = 1; m0 <= M0; ++m0) {
      const double x = m0 * ctx.ds;
      for (int i = 0; i < k; ++i) {
        double acc = 0.0;
        for (int j = 0; j < k; ++j) {
          if (j == i) continue;
          acc += ctx.jump[static_cast<size_t>(i) * k + j] * (x - lvl[static_cast<size_t>(m0) * k + j]);
        }
        chi[(static_cast<size_t>(q) * k + i) * M0 + (m0 - 1)] = acc;
      }
    }
  };

  // kernel table when it fits the budget; the fallback evaluates the same
  // expression on the fly, so results do not depend on the mode
  const size_t table_entries = static_cast<size_t>(N) * k * M0 * M0;
  const bool use_table = table_entries * sizeof(double) <= opts.kernel_table_budget;
  std::vector<double> table;
  if (use_table) {
    table.resize(table_entries);
    const long rows = static_cast<long>(N) * k * M0;
#pragma omp parallel for schedule(static) if (par)
    for (long row = 0; row < rows; ++row) {
      const int m = static_cast<int>(row % M0) + 1;
      const int il = static_cast<int>(row / M0);  // (l-1)*k + i
      double* out = table.data() + static_cast<size_t>(row) * M0;
      const double log_m = ctx.logs[m];
      for (int m0 = 1; m0 <= M0; ++m0) out[m0 - 1] = ctx.alpha(il, log_m, m0);
    }
  }

  // terminal level: the payoff
  for (int m = 0; m <= M0; ++m) {
    const double payoff = std::max(m * ctx.ds - ctx.strike, 0.0);
    for (int i = 0; i < k; ++i) phi[static_cast<size_t>(m) * k + i] = payoff;
  }
  if (opts.post_level) opts.post_level(0, level_span(0));
  update_chi(0);

  bool diverged = false;
  int diverged_n = 0, diverged_m = 0;
  for (int n = 1; n <= N; ++n) {
    const std::vector<double>& wn = ctx.weights.row(n);
    const double wn0 = wn[0];
    double* lvl = phi + static_cast<size_t>(n) * level_stride;
    const double* prev = phi + static_cast<size_t>(n - 1) * level_stride;

#pragma omp parallel if (par)
    {
      std::vector<double> xi(k), cur(k), nxt(k);
#pragma omp for schedule(static)
      for (int m = 1; m <= M0; ++m) {
        const double s = m * ctx.ds;
        const double log_m = ctx.logs[m];
        for (int i = 0; i < k; ++i) {
          const double ci = bsm_price(s, ctx.strike, ctx.rate, ctx.sig[i], n * ctx.dt);
          double val = s - ctx.e_lam[static_cast<size_t>(n) * k + i] * (s - ci);
          if (ctx.lam[i] > 0.0) {
            // truncated tail, valued with the asymptotic slope
            double tail = 0.0;
            for (int l = 1; l <= n; ++l) {
              const size_t il = static_cast<size_t>(l - 1) * k + i;
              const double zf = (ctx.log_bound - log_m - ctx.drift_v[il]) * ctx.inv_sv[il];
              const double one_minus_f = 0.5 * std::erfc(zf * kInvSqrt2);
              tail += wn[l] * ctx.e_lam[static_cast<size_t>(l) * k + i] * one_minus_f;
            }
            val -= ctx.disc_strike[n] * ctx.lam[i] * ctx.dt * tail;
            // l = 0 contribution of the (x - phi) integral via the discrete Dirac
            val -= ctx.lam[i] * ctx.dt * wn0 * s;
            // history term over earlier levels
            double hist = 0.0;
            for (int l = 1; l <= n; ++l) {
              const size_t il = static_cast<size_t>(l - 1) * k + i;
              const double* chi_row = chi.data() + (static_cast<size_t>(n - l) * k + i) * M0;
              const double ssum =
                  use_table ? space_sum_table(table.data() + (il * M0 + (m - 1)) * M0, chi_row,
                                              ctx.wbar.data(), M0)
                            : space_sum_fly(ctx, static_cast<int>(il), log_m, chi_row);
              hist += wn[l] * ctx.e_lamr[il] * ssum;
            }
            val -= ctx.lam[i] * ctx.dt * ctx.ds * hist;
          }
          xi[i] = val;
        }

        // implicit coupling across regimes at this node: Jacobi iteration,
        // contraction factor <= dt * max lambda * w_n(0) under stability
        for (int i = 0; i < k; ++i) cur[i] = prev[static_cast<size_t>(m) * k + i];
        bool converged = false;
        for (int it = 0; it < opts.fixed_point_cap; ++it) {
          double max_diff = 0.0;
          for (int i = 0; i < k; ++i) {
            double coup = 0.0;
            if (ctx.lam[i] > 0.0) {
              for (int j = 0; j < k; ++j) {
                if (j != i) coup += ctx.jump[static_cast<size_t>(i) * k + j] * cur[j];
              }
              coup *= ctx.lam[i] * ctx.dt * wn0;
            }
            nxt[i] = std::max(0.0, xi[i] + coup);
            max_diff = std::max(max_diff, std::abs(nxt[i] - cur[i]));
          }
          std::swap(cur, nxt);
          if (max_diff <= opts.fixed_point_tol) {
            converged = true;
            break;
          }
        }
        if (!converged) {
#pragma omp critical
          {
            diverged = true;
            diverged_n = n;
            diverged_m = m;
          }
        }
        for (int i = 0; i < k; ++i) lvl[static_cast<size_t>(m) * k + i] = cur[i];
      }
    }
    if (diverged)
      raise(ErrorCode::FixedPointDivergence,
            "no convergence at level " + std::to_string(diverged_n) + ", node " +
                std::to_string(diverged_m));
    // lvl[0] stays 0 for all regimes
    if (opts.post_level) opts.post_level(n, level_span(n));
    update_chi(n);
  }
  return surf;
}

double price_at(const PriceSurface& surface, double t, double s, int regime) {
  const double T = surface.contract.maturity;
  if (t < 0.0 || t > T + 1e-12)
    raise(ErrorCode::OutOfRange, "t = " + fmt_double(t) + " outside [0, T]");
  if (regime < 1 || regime > surface.n_regimes)
    raise(ErrorCode::ValidationError, "regime out of range");
  const double M = surface.grid.space_bound;
  if (s < 0.0 || s > M * (1.0 + 1e-12))
    raise(ErrorCode::OutOfDomain,
          "s = " + fmt_double(s) + " outside [0, " + fmt_double(M) + "]; enlarge the space bound");

  int n = static_cast<int>(std::llround((T - t) / surface.dt));
  n = std::clamp(n, 0, surface.n_levels);

  double u = s / surface.ds;
  int m_lo = static_cast<int>(std::floor(u));
  double frac = u - m_lo;
  if (frac < 1e-9) {
    frac = 0.0;
  } else if (frac > 1.0 - 1e-9) {
    m_lo += 1;
    frac = 0.0;
  }
  if (m_lo >= surface.n_nodes) return surface.value(n, surface.n_nodes, regime);
  if (frac == 0.0) return surface.value(n, m_lo, regime);
  return (1.0 - frac) * surface.value(n, m_lo, regime) +
         frac * surface.value(n, m_lo + 1, regime);
}

namespace {

double level_sup_diff(const PriceSurface& a, const PriceSurface& b, int n) {
  const size_t stride = static_cast<size_t>(a.n_nodes + 1) * a.n_regimes;
  double sup = 0.0;
  for (size_t j = 0; j < stride; ++j)
    sup = std::max(sup, std::abs(a.values[n * stride + j] - b.values[n * stride + j]));
  return sup;
}

}  // namespace

PerturbationResult perturbation_experiment(const ModelParams& params, const Contract& contract,
                                           const Grid& grid, int n_star, double delta,
                                           const SolveOptions& opts) {
  if (n_star < 0 || n_star >= grid.n_time)
    raise(ErrorCode::ValidationError, "perturbation level out of range");
  SolveOptions base_opts = opts;
  base_opts.post_level = nullptr;
  const PriceSurface base = solve_surface(params, contract, grid, base_opts);

  SolveOptions pert_opts = base_opts;
  pert_opts.post_level = [n_star, delta](int level, std::span<double> vals) {
    if (level == n_star)
      for (double& v : vals) v += delta;
  };
  const PriceSurface pert = solve_surface(params, contract, grid, pert_opts);

  PerturbationResult res;
  res.stability = stability_check(params, grid);
  for (int n = n_star + 1; n <= grid.n_time; ++n)
    res.max_effect = std::max(res.max_effect, level_sup_diff(base, pert, n));
  res.final_effect = level_sup_diff(base, pert, grid.n_time);
  return res;
}

PerturbationResult perturbation_all_levels(const ModelParams& params, const Contract& contract,
                                           const Grid& grid, double delta,
                                           const SolveOptions& opts) {
  SolveOptions base_opts = opts;
  base_opts.post_level = nullptr;
  const PriceSurface base = solve_surface(params, contract, grid, base_opts);

  const int N = grid.n_time;
  SolveOptions pert_opts = base_opts;
  pert_opts.post_level = [N, delta](int level, std::span<double> vals) {
    if (level >= 1 && level <= N - 1)
      for (double& v : vals) v += delta;
  };
  const PriceSurface pert = solve_surface(params, contract, grid, pert_opts);

  PerturbationResult res;
  res.stability = stability_check(params, grid);
  for (int n = 1; n <= N; ++n) res.max_effect = std::max(res.max_effect, level_sup_diff(base, pert, n));
  res.final_effect = level_sup_diff(base, pert, N);
  return res;
}

}  // namespace mmgbm
