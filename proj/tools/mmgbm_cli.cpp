// Command-line front end for the regime-switching pricing and recovery
// experiments. Every subcommand writes CSV outputs plus a manifest with the
// resolved config snapshot, so a run can be reproduced byte for byte.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmgbm/bsm.hpp"
#include "mmgbm/csv.hpp"
#include "mmgbm/iv.hpp"
#include "mmgbm/markov.hpp"
#include "mmgbm/model.hpp"
#include "mmgbm/pricer.hpp"
#include "mmgbm/recover.hpp"
#include "mmgbm/smile.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace {

constexpr const char* kVersion = "mmgbm 1.0.0";

constexpr const char* kDefaultConfig = R"([model]
num_regimes = 3
rate_matrix = -10 6.666666666666667 3.333333333333333; 10 -20 10; 3.333333333333333 6.666666666666667 -10
drift = 0.08 0.09 0.1
volatility = 0.2 0.3 0.4
interest_rate = 0.05

[contract]
strike = 1.0
maturity = 0.1

[grid]
n_time = 51
n_space = 400
space_bound = 1.5

[scenario]
initial_price = 1.0
initial_regime = 1
step = 0.004
horizon_steps = 200
rng_seed = 0
)";

constexpr const char* kExperimentList = R"(experiment map (one subcommand per figure-style experiment):
  price    option price vs spot for one contract: regime prices, single-regime
           closed-form prices and the maturity payoff (7 curves for 3 regimes)
  smile    IV vs strike at fixed spot and TTM, with the quadratic smile fit
  sweep    smile coefficients for the 96 extreme parameter combinations
  ttm      IV vs time to maturity per regime
  ivtts    per-state mean IV across spots (constancy check) and the
           fixed-contract IV time series for the configured scenario
  recover  simulate a market, build the IV series (fixed or rounded
           contracts), cluster the histogram, assign regimes, score accuracy
  stability  time-step stability report for the configured grid
)";

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

struct RunWriter {
  std::string dir;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  explicit RunWriter(const std::string& out_dir) : dir(out_dir) {
    std::filesystem::create_directories(dir);
  }

  std::string path(const std::string& name) const { return dir + "/" + name; }

  void emit(const std::string& name, const std::string& content) {
    mmgbm::write_file(path(name), content);
    outputs.push_back(name);
  }

  void manifest(const std::string& subcommand, const mmgbm::LoadedConfig& cfg) {
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    std::ostringstream out;
    out << "subcommand = " << subcommand << "\n";
    out << "version = " << kVersion << "\n";
    out << "seed = " << cfg.scenario.rng_seed << "\n";
    out << "wall_ms = " << wall_ms << "\n";
    for (const auto& f : outputs) out << "output = " << f << "\n";
    out << "\n# resolved config snapshot\n" << mmgbm::serialize_config(cfg);
    mmgbm::write_file(path("manifest.txt"), out.str());
  }
};

mmgbm::LoadedConfig resolve_config(const GlobalArgs& g) {
  mmgbm::LoadedConfig cfg = g.config_path.empty()
                                ? mmgbm::parse_config(kDefaultConfig, "<built-in>")
                                : mmgbm::load_config(g.config_path);
  if (g.seed_set) cfg.scenario.rng_seed = g.seed;
  if (g.threads > 0) {
#if defined(_OPENMP)
    omp_set_num_threads(g.threads);
#endif
  }
  return cfg;
}

int exit_code_for(mmgbm::ErrorCode code) {
  using EC = mmgbm::ErrorCode;
  switch (code) {
    case EC::ParseError:
    case EC::ValidationError:
    case EC::NonConservativeRateMatrix:
    case EC::NegativeOffDiagonal:
    case EC::NonpositiveVolatility:
      return 2;
    case EC::ClusteringAmbiguous:
      return 4;
    default:
      return 3;  // numeric failure
  }
}

// ---- subcommands ----------------------------------------------------------

void cmd_price(const GlobalArgs& g, int grid_n, int grid_m0, double space_bound,
               const std::string& out_name) {
  mmgbm::LoadedConfig cfg = resolve_config(g);
  if (grid_n > 0) cfg.grid.n_time = grid_n;
  if (grid_m0 > 0) cfg.grid.n_space = grid_m0;
  if (space_bound > 0) cfg.grid.space_bound = space_bound;
  cfg.grid = mmgbm::validate(cfg.grid, cfg.contract);

  RunWriter run(g.out_dir);
  const mmgbm::ModelParams& model = cfg.scenario.model;
  const mmgbm::PriceSurface surf = mmgbm::solve_surface(model, cfg.contract, cfg.grid);

  {
    mmgbm::CsvBuilder csv({"n", "m", "regime", "s", "phi"});
    for (int n = 0; n <= surf.n_levels; ++n)
      for (int m = 0; m <= surf.n_nodes; ++m)
        for (int i = 1; i <= surf.n_regimes; ++i)
          csv.cell(n).cell(m).cell(i).cell(m * surf.ds).cell(surf.value(n, m, i)).endrow();
    run.emit(out_name, csv.str());
  }
  {
    // price vs spot at evaluation time: per-regime, single-regime closed form
    // per regime, and the payoff
    std::vector<std::string> header{"s"};
    for (int i = 1; i <= surf.n_regimes; ++i) header.push_back("phi_" + std::to_string(i));
    for (int i = 1; i <= surf.n_regimes; ++i) header.push_back("bsm_" + std::to_string(i));
    header.push_back("payoff");
    mmgbm::CsvBuilder csv(header);
    for (int m = 0; m <= surf.n_nodes; ++m) {
      const double s = m * surf.ds;
      csv.cell(s);
      for (int i = 1; i <= surf.n_regimes; ++i) csv.cell(surf.value(surf.n_levels, m, i));
      for (int i = 1; i <= surf.n_regimes; ++i)
        csv.cell(mmgbm::bsm_price(s, cfg.contract.strike, model.interest_rate,
                                  model.sigma(i - 1), cfg.contract.maturity));
      csv.cell(std::max(s - cfg.contract.strike, 0.0)).endrow();
    }
    run.emit("price_curves.csv", csv.str());
  }
  run.manifest("price", cfg);
}

void cmd_smile(const GlobalArgs& g, double lo, double hi, double step) {
  const mmgbm::LoadedConfig cfg = resolve_config(g);
  RunWriter run(g.out_dir);
  std::vector<double> strikes;
  for (double strike = lo; strike <= hi + 1e-12; strike += step) strikes.push_back(strike);
  const double ttm = cfg.contract.maturity;
  const mmgbm::SmileCurve curve = mmgbm::smile_sweep(cfg.scenario.model, cfg.scenario.initial_price,
                                                     ttm, strikes, cfg.grid);
  {
    mmgbm::CsvBuilder csv({"regime", "strike", "iv"});
    for (int i = 1; i <= cfg.scenario.model.num_regimes; ++i)
      for (size_t j = 0; j < curve.strikes.size(); ++j)
        csv.cell(i).cell(curve.strikes[j]).cell(curve.iv[static_cast<size_t>(i) - 1][j]).endrow();
    run.emit("smile_curve.csv", csv.str());
  }
  {
    const auto fits = mmgbm::fit_smile(curve);
    mmgbm::CsvBuilder csv({"regime", "a2", "a1", "a0", "residual"});
    for (size_t i = 0; i < fits.size(); ++i)
      csv.cell(static_cast<int>(i + 1))
          .cell(fits[i].a2)
          .cell(fits[i].a1)
          .cell(fits[i].a0)
          .cell(fits[i].residual)
          .endrow();
    run.emit("smile_fit.csv", csv.str());
  }
  run.manifest("smile", cfg);
}

void cmd_ttm(const GlobalArgs& g, int days_lo, int days_hi, int days_step, double moneyness) {
  const mmgbm::LoadedConfig cfg = resolve_config(g);
  RunWriter run(g.out_dir);
  std::vector<double> ttms;
  std::vector<int> days;
  for (int d = days_lo; d <= days_hi; d += days_step) {
    days.push_back(d);
    ttms.push_back(d / 250.0);  // trading-day convention: the library works in years
  }
  const mmgbm::TtmTable table =
      mmgbm::ttm_sweep(cfg.scenario.model, cfg.scenario.initial_price, moneyness, ttms, cfg.grid);
  mmgbm::CsvBuilder csv({"regime", "ttm_days", "iv"});
  for (int i = 1; i <= cfg.scenario.model.num_regimes; ++i)
    for (size_t j = 0; j < ttms.size(); ++j)
      csv.cell(i).cell(days[j]).cell(table.iv[static_cast<size_t>(i) - 1][j]).endrow();
  run.emit("ttm.csv", csv.str());
  run.manifest("ttm", cfg);
}

void cmd_ivtts(const GlobalArgs& g, double spot_lo, double spot_hi, double spot_step,
               double moneyness, double ttm, double price_noise) {
  const mmgbm::LoadedConfig cfg = resolve_config(g);
  RunWriter run(g.out_dir);
  const mmgbm::ModelParams& model = cfg.scenario.model;

  // per-state mean IV across spots
  std::vector<double> spots;
  for (double s = spot_lo; s <= spot_hi + 1e-12; s += spot_step) spots.push_back(s);
  const mmgbm::ConstancyTable table =
      mmgbm::aivp_constancy_sweep(model, moneyness, ttm, spots, cfg.grid);
  {
    mmgbm::CsvBuilder csv({"regime", "s", "iv_mean"});
    for (int i = 1; i <= model.num_regimes; ++i)
      for (size_t j = 0; j < spots.size(); ++j)
        csv.cell(i).cell(spots[j]).cell(table.iv[static_cast<size_t>(i) - 1][j]).endrow();
    run.emit("ivbar.csv", csv.str());
  }
  {
    mmgbm::CsvBuilder csv({"regime", "ebar"});
    for (int i = 1; i <= model.num_regimes; ++i)
      csv.cell(i).cell(table.ebar[static_cast<size_t>(i) - 1]).endrow();
    run.emit("ebar.csv", csv.str());
  }

  // fixed-contract IV time series for the configured scenario
  const mmgbm::SimulatedMarket market =
      mmgbm::simulate_market(cfg.scenario, cfg.scenario.horizon_steps);
  mmgbm::AivpParams aivp;
  aivp.moneyness = moneyness;
  aivp.ttm = ttm;
  aivp.noise.sd = price_noise;
  aivp.noise.seed = cfg.scenario.rng_seed + 1;
  const mmgbm::IVSeries series =
      mmgbm::build_aivp(market, mmgbm::AivpMode::Fixed, aivp, cfg.grid);
  run.emit("aivp_fixed.csv", mmgbm::to_csv(series));
  run.manifest("ivtts", cfg);
}

void cmd_recover(const GlobalArgs& g, const std::string& mode_name, long steps, double moneyness,
                 double ttm, double strike_step, double expiry_step, double price_noise) {
  const mmgbm::LoadedConfig cfg = resolve_config(g);
  RunWriter run(g.out_dir);
  const mmgbm::AivpMode mode =
      mode_name == "fixed" ? mmgbm::AivpMode::Fixed : mmgbm::AivpMode::Rounded;

  const long n_steps = steps > 0 ? steps : cfg.scenario.horizon_steps;
  const mmgbm::SimulatedMarket market = mmgbm::simulate_market(cfg.scenario, n_steps);

  mmgbm::AivpParams aivp;
  aivp.moneyness = moneyness;
  aivp.ttm = ttm > 0 ? ttm : (mode == mmgbm::AivpMode::Fixed ? 0.1 : 0.12);
  aivp.strike_step = strike_step;
  aivp.expiry_step = expiry_step;
  aivp.noise.sd = price_noise;
  aivp.noise.seed = cfg.scenario.rng_seed + 1;
  const mmgbm::IVSeries series = mmgbm::build_aivp(market, mode, aivp, cfg.grid);
  run.emit("aivp.csv", mmgbm::to_csv(series));

  const std::vector<double> cutoffs =
      mmgbm::histogram_cluster(series.iv, cfg.scenario.model.num_regimes);
  {
    mmgbm::CsvBuilder csv({"index", "cutoff"});
    for (size_t c = 0; c < cutoffs.size(); ++c)
      csv.cell(static_cast<int>(c + 1)).cell(cutoffs[c]).endrow();
    run.emit("cutoffs.csv", csv.str());
  }
  {
    // histogram of the IV values at the clustering's initial bin width
    const double width = 0.01;
    const auto [lo_it, hi_it] = std::minmax_element(series.iv.begin(), series.iv.end());
    const int nbins =
        std::max(1, static_cast<int>(std::ceil((*hi_it - *lo_it) / width - 1e-9)));
    std::vector<long> counts(static_cast<size_t>(nbins), 0);
    for (double v : series.iv) {
      const int idx = std::min(nbins - 1, static_cast<int>((v - *lo_it) / width));
      counts[static_cast<size_t>(std::max(0, idx))] += 1;
    }
    mmgbm::CsvBuilder csv({"bin_lo", "bin_hi", "count"});
    for (int b = 0; b < nbins; ++b)
      csv.cell(*lo_it + b * width).cell(*lo_it + (b + 1) * width).cell(counts[static_cast<size_t>(b)]).endrow();
    run.emit("histogram.csv", csv.str());
  }

  const mmgbm::RecoveryResult res = mmgbm::assign_regimes(
      series, cutoffs, mmgbm::regimes_by_sigma(cfg.scenario.model), market.true_regimes);
  {
    mmgbm::CsvBuilder csv({"t", "iv", "true_regime", "assigned_regime"});
    for (size_t j = 0; j < series.size(); ++j)
      csv.cell(series.times[j])
          .cell(series.iv[j])
          .cell(market.true_regimes[j])
          .cell(res.assigned[j])
          .endrow();
    run.emit("assignments.csv", csv.str());
  }
  {
    std::ostringstream rep;
    rep << "mode = " << mode_name << "\n";
    rep << "steps = " << n_steps << "\n";
    rep << "cutoffs =";
    for (double c : cutoffs) rep << " " << mmgbm::fmt_double(c);
    rep << "\n";
    rep << "accuracy = " << mmgbm::fmt_double(res.accuracy) << " (" << res.n_correct << "/"
        << res.n_total << ")\n";
    rep << "confusion matrix (rows true, cols assigned):\n";
    for (int i = 1; i <= res.k; ++i) {
      for (int j = 1; j <= res.k; ++j) rep << "\t" << res.confusion_at(i, j);
      rep << "\n";
    }
    run.emit("report.txt", rep.str());
    std::cout << rep.str();
  }
  run.manifest("recover", cfg);
}

void cmd_stability(const GlobalArgs& g) {
  const mmgbm::LoadedConfig cfg = resolve_config(g);
  RunWriter run(g.out_dir);
  const mmgbm::StabilityReport rep = mmgbm::stability_check(cfg.scenario.model, cfg.grid);
  std::ostringstream out;
  out << "a (max exit rate) = " << mmgbm::fmt_double(rep.max_exit_rate) << "\n";
  out << "rate matrix norm = " << mmgbm::fmt_double(rep.rate_matrix_norm) << "\n";
  out << "dt = " << mmgbm::fmt_double(rep.dt) << "\n";
  out << "b = " << mmgbm::fmt_double(rep.b) << "\n";
  out << "dt bound = " << mmgbm::fmt_double(rep.dt_bound) << "\n";
  out << "error growth factor = " << mmgbm::fmt_double(rep.error_growth) << "\n";
  out << "pass = " << (rep.pass ? "yes" : "no") << "\n";
  out << "note: " << rep.note << "\n";
  run.emit("stability.txt", out.str());
  std::cout << out.str();
  run.manifest("stability", cfg);
  if (!rep.pass) mmgbm::raise(mmgbm::ErrorCode::StabilityViolation, "grid fails the bound");
}

void cmd_sweep(const GlobalArgs& g, bool subset, int grid_n, int grid_m0) {
  const mmgbm::LoadedConfig cfg = resolve_config(g);
  RunWriter run(g.out_dir);
  mmgbm::SweepSpec spec;
  if (grid_n > 0) spec.grid.n_time = grid_n;
  if (grid_m0 > 0) spec.grid.n_space = grid_m0;
  if (subset) spec.case_filter = {0, 9, 16, 25, 32, 41, 48, 57, 64, 73, 80, 89};
  const auto results = mmgbm::parameter_sweep(spec);
  run.emit("smile.csv", mmgbm::to_csv(results));
  long failed = 0;
  for (const auto& res : results)
    if (!res.error.empty()) ++failed;
  std::cout << "sweep: " << results.size() << " cases, " << failed << " failed\n";
  run.manifest("sweep", cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regime-switching option pricing, implied volatility and regime recovery"};
  app.set_version_flag("--version", kVersion);

  GlobalArgs g;
  bool list_experiments = false;
  app.add_option("--config", g.config_path, "config file (built-in example when omitted)");
  app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", g.seed, "override the scenario seed");
  app.add_option("--threads", g.threads, "worker threads (0 = library default)");
  app.add_flag("--list-experiments", list_experiments, "print the experiment map and exit");

  int grid_n = 0, grid_m0 = 0;
  double space_bound = 0.0;
  std::string out_name = "surface.csv";
  auto* price = app.add_subcommand("price", "solve the option price surface");
  price->add_option("--grid-N", grid_n, "time steps");
  price->add_option("--grid-M0", grid_m0, "space steps (even)");
  price->add_option("--space-bound", space_bound, "truncation bound");
  price->add_option("--out", out_name, "surface csv name")->capture_default_str();

  double strike_lo = 0.8, strike_hi = 1.2, strike_step = 0.02;
  auto* smile = app.add_subcommand("smile", "IV vs strike");
  smile->add_option("--strike-min", strike_lo)->capture_default_str();
  smile->add_option("--strike-max", strike_hi)->capture_default_str();
  smile->add_option("--strike-step", strike_step)->capture_default_str();

  int days_lo = 10, days_hi = 50, days_step = 5;
  double ttm_moneyness = 1.0;
  auto* ttm = app.add_subcommand("ttm", "IV vs time to maturity");
  ttm->add_option("--days-min", days_lo)->capture_default_str();
  ttm->add_option("--days-max", days_hi)->capture_default_str();
  ttm->add_option("--days-step", days_step)->capture_default_str();
  ttm->add_option("--moneyness", ttm_moneyness)->capture_default_str();

  double spot_lo = 0.8, spot_hi = 1.2, spot_step = 0.025, iv_moneyness = 1.0, iv_ttm = 0.1;
  double ivtts_noise = 0.0;
  auto* ivtts = app.add_subcommand("ivtts", "IV constancy across spots + fixed-contract series");
  ivtts->add_option("--spot-min", spot_lo)->capture_default_str();
  ivtts->add_option("--spot-max", spot_hi)->capture_default_str();
  ivtts->add_option("--spot-step", spot_step)->capture_default_str();
  ivtts->add_option("--moneyness", iv_moneyness)->capture_default_str();
  ivtts->add_option("--ttm", iv_ttm)->capture_default_str();
  ivtts->add_option("--price-noise", ivtts_noise, "sd of additive price noise")
      ->capture_default_str();

  std::string mode = "rounded";
  long steps = 0;
  double rec_moneyness = 1.0, rec_ttm = 0.0, rec_strike_step = 0.01, rec_expiry_step = 0.08;
  double rec_noise = 0.0;
  auto* recover = app.add_subcommand("recover", "simulate, build the IV series, recover regimes");
  recover->add_option("--mode", mode, "fixed | rounded")
      ->check(CLI::IsMember({"fixed", "rounded"}))
      ->capture_default_str();
  recover->add_option("--steps", steps, "sampling steps (0 = scenario horizon)");
  recover->add_option("--moneyness", rec_moneyness)->capture_default_str();
  recover->add_option("--ttm", rec_ttm, "contract ttm (0 = 0.1 fixed / 0.12 rounded)");
  recover->add_option("--strike-step", rec_strike_step)->capture_default_str();
  recover->add_option("--expiry-step", rec_expiry_step)->capture_default_str();
  recover->add_option("--price-noise", rec_noise, "sd of additive price noise")
      ->capture_default_str();

  auto* stability = app.add_subcommand("stability", "time-step stability report");

  bool sweep_subset = false;
  int sweep_n = 0, sweep_m0 = 0;
  auto* sweep = app.add_subcommand("sweep", "96-combination smile-coefficient sweep");
  sweep->add_flag("--subset", sweep_subset, "run the 12-case stratified subset");
  sweep->add_option("--grid-N", sweep_n, "time steps (default 26)");
  sweep->add_option("--grid-M0", sweep_m0, "space steps (default 200)");

  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help / --version
    std::cerr << "error: ParseError: " << e.what() << "\n";
    return 2;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    if (list_experiments) {
      std::cout << kExperimentList;
      return 0;
    }
    if (price->parsed()) {
      cmd_price(g, grid_n, grid_m0, space_bound, out_name);
    } else if (smile->parsed()) {
      cmd_smile(g, strike_lo, strike_hi, strike_step);
    } else if (ttm->parsed()) {
      cmd_ttm(g, days_lo, days_hi, days_step, ttm_moneyness);
    } else if (ivtts->parsed()) {
      cmd_ivtts(g, spot_lo, spot_hi, spot_step, iv_moneyness, iv_ttm, ivtts_noise);
    } else if (recover->parsed()) {
      cmd_recover(g, mode, steps, rec_moneyness, rec_ttm, rec_strike_step, rec_expiry_step,
                  rec_noise);
    } else if (stability->parsed()) {
      cmd_stability(g);
    } else if (sweep->parsed()) {
      cmd_sweep(g, sweep_subset, sweep_n, sweep_m0);
    } else {
      std::cout << app.help();
    }
  } catch (const mmgbm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
