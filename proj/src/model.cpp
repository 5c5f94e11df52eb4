#include "mmgbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "mmgbm/csv.hpp"

namespace mmgbm {

namespace {

constexpr double kRowSumTol = 1e-12;

}  // namespace

double ModelParams::max_exit_rate() const {
  double a = 0.0;
  for (double l : exit_rate) a = std::max(a, l);
  return a;
}

double ModelParams::inf_norm() const {
  double norm = 0.0;
  for (int i = 0; i < num_regimes; ++i) {
    double row = 0.0;
    for (int j = 0; j < num_regimes; ++j) row += std::abs(entry(i, j));
    norm = std::max(norm, row);
  }
  return norm;
}

ModelParams validate(ModelParams params) {
  const int k = params.num_regimes;
  if (k < 1) raise(ErrorCode::ValidationError, "num_regimes must be >= 1");
  if (params.rate_matrix.size() != static_cast<size_t>(k) * k)
    raise(ErrorCode::ValidationError, "rate_matrix must be k x k");
  if (params.volatility.size() != static_cast<size_t>(k))
    raise(ErrorCode::ValidationError, "volatility must have k entries");
  if (params.drift.empty()) params.drift.assign(k, 0.0);
  if (params.drift.size() != static_cast<size_t>(k))
    raise(ErrorCode::ValidationError, "drift must have k entries");
  if (params.interest_rate < 0.0)
    raise(ErrorCode::ValidationError, "interest_rate must be >= 0");

  for (int i = 0; i < k; ++i) {
    if (!(params.volatility[i] > 0.0))
      raise(ErrorCode::NonpositiveVolatility,
            "sigma(" + std::to_string(i + 1) + ") = " + fmt_double(params.volatility[i]));
  }

  params.exit_rate.assign(k, 0.0);
  params.jump_prob.assign(static_cast<size_t>(k) * k, 0.0);
  for (int i = 0; i < k; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < k; ++j) {
      const double lij = params.entry(i, j);
      if (j != i && lij < 0.0)
        raise(ErrorCode::NegativeOffDiagonal, "rate_matrix(" + std::to_string(i + 1) + "," +
                                                  std::to_string(j + 1) + ") = " + fmt_double(lij));
      row_sum += lij;
    }
    if (std::abs(row_sum) > kRowSumTol)
      raise(ErrorCode::NonConservativeRateMatrix,
            "row " + std::to_string(i + 1) + " sums to " + fmt_double(row_sum));
    params.exit_rate[i] = std::abs(params.entry(i, i));
    if (params.exit_rate[i] > 0.0) {
      for (int j = 0; j < k; ++j)
        if (j != i)
          params.jump_prob[static_cast<size_t>(i) * k + j] =
              params.entry(i, j) / params.exit_rate[i];
    }
  }
  params.validated = true;
  return params;
}

Contract validate(Contract c) {
  if (!(c.strike > 0.0)) raise(ErrorCode::ValidationError, "strike must be > 0");
  if (!(c.maturity > 0.0)) raise(ErrorCode::ValidationError, "maturity must be > 0");
  if (c.eval_time < 0.0 || c.eval_time > c.maturity)
    raise(ErrorCode::ValidationError, "eval_time must lie in [0, maturity]");
  if (c.moneyness && !(*c.moneyness > 0.0))
    raise(ErrorCode::ValidationError, "moneyness must be > 0");
  if (c.ttm) {
    if (!(*c.ttm > 0.0)) raise(ErrorCode::ValidationError, "ttm must be > 0");
    if (std::abs(*c.ttm - (c.maturity - c.eval_time)) > 1e-12)
      raise(ErrorCode::ValidationError, "ttm must equal maturity - eval_time");
  }
  return c;
}

Grid validate(Grid g, const Contract& c) {
  if (g.n_time < 1) raise(ErrorCode::ValidationError, "n_time must be >= 1");
  if (g.n_space < 2) raise(ErrorCode::ValidationError, "n_space must be >= 2");
  if (g.n_space % 2 != 0)
    raise(ErrorCode::ValidationError, "n_space must be even (space quadrature is Simpson's)");
  if (!(g.space_bound > c.strike))
    raise(ErrorCode::ValidationError, "space_bound must exceed the strike");
  if (!(g.maturity > 0.0)) raise(ErrorCode::ValidationError, "grid maturity must be > 0");
  return g;
}

MarketScenario validate(MarketScenario s) {
  s.model = validate(std::move(s.model));
  if (!(s.initial_price > 0.0)) raise(ErrorCode::ValidationError, "initial_price must be > 0");
  if (s.initial_regime < 1 || s.initial_regime > s.model.num_regimes)
    raise(ErrorCode::ValidationError, "initial_regime out of range");
  if (!(s.step > 0.0)) raise(ErrorCode::ValidationError, "step must be > 0");
  if (s.horizon_steps < 0) raise(ErrorCode::ValidationError, "horizon_steps must be >= 0");
  return s;
}

namespace {

struct RawEntry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, RawEntry>;

[[noreturn]] void parse_fail(const std::string& name, int line, const std::string& msg) {
  raise(ErrorCode::ParseError, name + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& tok, const std::string& name, int line) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') parse_fail(name, line, "not a number: '" + tok + "'");
  return v;
}

long parse_long(const std::string& tok, const std::string& name, int line) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') parse_fail(name, line, "not an integer: '" + tok + "'");
  return v;
}

std::vector<double> parse_vector(const std::string& text, const std::string& name, int line) {
  std::vector<double> out;
  std::istringstream iss(text);
  std::string tok;
  while (iss >> tok) out.push_back(parse_double(tok, name, line));
  return out;
}

std::vector<double> parse_matrix(const std::string& text, const std::string& name, int line) {
  // row-major, rows separated by ';'
  std::vector<std::vector<double>> rows;
  std::string part;
  std::istringstream iss(text);
  while (std::getline(iss, part, ';')) rows.push_back(parse_vector(part, name, line));
  if (rows.empty()) parse_fail(name, line, "empty matrix");
  const size_t ncol = rows.front().size();
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != ncol) parse_fail(name, line, "ragged matrix rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  if (rows.size() != ncol) parse_fail(name, line, "matrix must be square");
  return flat;
}

const Section* find(const std::map<std::string, Section>& sections, const std::string& key) {
  const auto it = sections.find(key);
  return it == sections.end() ? nullptr : &it->second;
}

class SectionReader {
 public:
  SectionReader(const Section* sec, std::string cfg_name) : sec_(sec), name_(std::move(cfg_name)) {}

  bool has(const std::string& key) const { return sec_ && sec_->count(key); }

  const RawEntry& at(const std::string& key) const { return sec_->at(key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return parse_double(at(key).value, name_, at(key).line);
  }

  long integer(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    return parse_long(at(key).value, name_, at(key).line);
  }

 private:
  const Section* sec_;
  std::string name_;
};

}  // namespace

LoadedConfig parse_config(const std::string& text, const std::string& name) {
  static const std::map<std::string, std::vector<std::string>> kKnownKeys = {
      {"model", {"num_regimes", "rate_matrix", "drift", "volatility", "interest_rate"}},
      {"contract", {"strike", "maturity"}},
      {"grid", {"n_time", "n_space", "space_bound"}},
      {"scenario", {"initial_price", "initial_regime", "step", "horizon_steps", "rng_seed"}},
  };

  std::map<std::string, Section> sections;
  std::string current;
  std::istringstream iss(text);
  std::string raw;
  int line = 0;
  while (std::getline(iss, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') parse_fail(name, line, "unterminated section header");
      current = trim(s.substr(1, s.size() - 2));
      if (!kKnownKeys.count(current)) parse_fail(name, line, "unknown section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) parse_fail(name, line, "expected 'key = value'");
    if (current.empty()) parse_fail(name, line, "key outside any section");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const auto& known = kKnownKeys.at(current);
    if (std::find(known.begin(), known.end(), key) == known.end())
      parse_fail(name, line, "unknown key '" + key + "' in section [" + current + "]");
    if (sections[current].count(key)) parse_fail(name, line, "duplicate key '" + key + "'");
    sections[current][key] = {value, line};
  }

  if (sections.empty()) parse_fail(name, 1, "empty config");
  const Section* model_sec = find(sections, "model");
  if (!model_sec) parse_fail(name, 1, "missing [model] section");

  SectionReader model_rd(model_sec, name);
  for (const char* req : {"num_regimes", "rate_matrix", "volatility"})
    if (!model_rd.has(req)) parse_fail(name, 1, std::string("missing model key '") + req + "'");

  ModelParams params;
  params.num_regimes = static_cast<int>(model_rd.integer("num_regimes", 0));
  {
    const auto& e = model_sec->at("rate_matrix");
    params.rate_matrix = parse_matrix(e.value, name, e.line);
  }
  {
    const auto& e = model_sec->at("volatility");
    params.volatility = parse_vector(e.value, name, e.line);
  }
  if (model_rd.has("drift")) {
    const auto& e = model_sec->at("drift");
    params.drift = parse_vector(e.value, name, e.line);
  }
  params.interest_rate = model_rd.number("interest_rate", 0.05);

  SectionReader contract_rd(find(sections, "contract"), name);
  Contract contract;
  contract.strike = contract_rd.number("strike", 1.0);
  contract.maturity = contract_rd.number("maturity", 0.1);

  SectionReader grid_rd(find(sections, "grid"), name);
  Grid grid;
  grid.n_time = static_cast<int>(grid_rd.integer("n_time", 51));
  grid.n_space = static_cast<int>(grid_rd.integer("n_space", 400));
  grid.space_bound = grid_rd.number("space_bound", 1.5);
  grid.maturity = contract.maturity;

  SectionReader scen_rd(find(sections, "scenario"), name);
  MarketScenario scenario;
  scenario.model = std::move(params);
  scenario.initial_price = scen_rd.number("initial_price", 1.0);
  scenario.initial_regime = static_cast<int>(scen_rd.integer("initial_regime", 1));
  scenario.step = scen_rd.number("step", 1.0 / 250.0);
  scenario.horizon_steps = scen_rd.integer("horizon_steps", 200);
  scenario.rng_seed = static_cast<std::uint64_t>(scen_rd.integer("rng_seed", 0));

  LoadedConfig cfg;
  cfg.contract = validate(contract);
  cfg.grid = validate(grid, cfg.contract);
  cfg.scenario = validate(std::move(scenario));
  return cfg;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(ErrorCode::ParseError, path + ": cannot open config file");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str(), path);
}

std::string serialize_config(const LoadedConfig& cfg) {
  const ModelParams& m = cfg.scenario.model;
  std::ostringstream out;
  auto join = [](const std::vector<double>& v, size_t begin, size_t end) {
    std::string s;
    for (size_t i = begin; i < end; ++i) {
      if (i > begin) s += ' ';
      s += fmt_double(v[i]);
    }
    return s;
  };

  out << "[model]\n";
  out << "num_regimes = " << m.num_regimes << "\n";
  out << "rate_matrix = ";
  for (int i = 0; i < m.num_regimes; ++i) {
    if (i) out << "; ";
    out << join(m.rate_matrix, static_cast<size_t>(i) * m.num_regimes,
                static_cast<size_t>(i + 1) * m.num_regimes);
  }
  out << "\n";
  out << "drift = " << join(m.drift, 0, m.drift.size()) << "\n";
  out << "volatility = " << join(m.volatility, 0, m.volatility.size()) << "\n";
  out << "interest_rate = " << fmt_double(m.interest_rate) << "\n";
  out << "\n[contract]\n";
  out << "strike = " << fmt_double(cfg.contract.strike) << "\n";
  out << "maturity = " << fmt_double(cfg.contract.maturity) << "\n";
  out << "\n[grid]\n";
  out << "n_time = " << cfg.grid.n_time << "\n";
  out << "n_space = " << cfg.grid.n_space << "\n";
  out << "space_bound = " << fmt_double(cfg.grid.space_bound) << "\n";
  out << "\n[scenario]\n";
  out << "initial_price = " << fmt_double(cfg.scenario.initial_price) << "\n";
  out << "initial_regime = " << cfg.scenario.initial_regime << "\n";
  out << "step = " << fmt_double(cfg.scenario.step) << "\n";
  out << "horizon_steps = " << cfg.scenario.horizon_steps << "\n";
  out << "rng_seed = " << cfg.scenario.rng_seed << "\n";
  return out.str();
}

}  // namespace mmgbm
