#include "mfpne/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <omp.h>

#include "mfpne/rng.hpp"
#include "mfpne/serialize.hpp"

namespace mfpne {

using nlohmann::json;

namespace detail {
extern const char* const kPresetSyntheticN2;
extern const char* const kPresetSyntheticN10;
extern const char* const kPresetPower;
extern const char* const kPresetAloha;
}  // namespace detail

namespace {

/// Object reader that records consumed keys so leftovers can be rejected.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing key '" + key + "'");
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) {
      used_.insert(key);
      return fallback;
    }
    return get<T>(key);
  }

  const json& sub(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing key '" + key + "'");
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

KernelParams parse_kernel(const json& j, const std::string& where) {
  Fields f(j, where);
  KernelParams p;
  p.h = f.get<double>("h");
  p.zeta = f.get<std::vector<double>>("zeta");
  p.rho = f.get<std::vector<double>>("rho");
  f.finish();
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return p;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void check_common(double B, double delta, int players, int fidelities, std::size_t costs, const std::string& kind) {
  require(B > 0.0, kind + ": B must be positive");
  require(delta > 0.0 && delta * players < 1.0, kind + ": delta must lie in (0, 1/N)");
  require(static_cast<std::size_t>(fidelities) == costs,
          kind + ": surrogate fidelity count differs from the cost ladder");
}

void check_ladder(const std::vector<double>& costs, const std::string& kind) {
  require(!costs.empty(), kind + ": empty cost ladder");
  for (std::size_t i = 0; i < costs.size(); ++i) {
    require(costs[i] > 0.0, kind + ": costs must be positive");
    if (i) require(costs[i] > costs[i - 1], kind + ": costs must be strictly increasing");
  }
}

TestbedParams parse_testbed(const json& j) {
  Fields f(j, "testbed");
  const auto kind = f.get<std::string>("kind");
  if (kind == "synthetic") {
    SyntheticConfig c;
    c.players = f.get<int>("players", c.players);
    c.grid_points = f.get<std::size_t>("grid_points", c.grid_points);
    if (f.has("generator")) c.generator = parse_kernel(f.sub("generator"), "testbed.generator");
    c.surrogate = f.has("surrogate") ? parse_kernel(f.sub("surrogate"), "testbed.surrogate") : c.generator;
    c.costs = f.get<std::vector<double>>("costs", c.costs);
    c.sigma2 = f.get<double>("sigma2", c.sigma2);
    c.B = f.get<double>("B", c.B);
    c.delta = f.get<double>("delta", c.delta);
    f.finish();
    require(c.players >= 1 && c.grid_points >= 1, "synthetic: players and grid_points must be positive");
    require(c.sigma2 > 0.0, "synthetic: sigma2 must be positive");
    check_ladder(c.costs, kind);
    check_common(c.B, c.delta, c.players, c.surrogate.fidelities(), c.costs.size(), kind);
    require(c.generator.fidelities() == c.surrogate.fidelities(),
            "synthetic: generator and surrogate fidelity counts differ");
    return c;
  }
  if (kind == "power") {
    PowerConfig c;
    c.links = f.get<int>("links", c.links);
    c.grid_points = f.get<std::size_t>("grid_points", c.grid_points);
    c.min_db = f.get<double>("min_db", c.min_db);
    c.max_db = f.get<double>("max_db", c.max_db);
    c.noise_db = f.get<double>("noise_db", c.noise_db);
    c.interference_db = f.get<double>("interference_db", c.interference_db);
    c.penalty = f.get<double>("penalty", c.penalty);
    c.samples = f.get<std::vector<int>>("samples", c.samples);
    c.truth_samples = f.get<std::size_t>("truth_samples", c.truth_samples);
    if (f.has("surrogate")) c.surrogate = parse_kernel(f.sub("surrogate"), "testbed.surrogate");
    c.B = f.get<double>("B", c.B);
    c.delta = f.get<double>("delta", c.delta);
    f.finish();
    require(c.links >= 1 && c.grid_points >= 1, "power: links and grid_points must be positive");
    require(c.max_db >= c.min_db, "power: max_db below min_db");
    require(c.truth_samples >= 2, "power: truth_samples must be at least 2");
    std::vector<double> ladder(c.samples.begin(), c.samples.end());
    check_ladder(ladder, kind);
    check_common(c.B, c.delta, c.links, c.surrogate.fidelities(), c.samples.size(), kind);
    return c;
  }
  if (kind == "aloha") {
    AlohaConfig c;
    c.energy_caps = f.get<std::vector<double>>("energy_caps", c.energy_caps);
    c.levels = f.get<std::size_t>("levels", c.levels);
    c.c1 = f.get<double>("c1", c.c1);
    c.c2 = f.get<double>("c2", c.c2);
    c.tradeoff = f.get<double>("tradeoff", c.tradeoff);
    c.fidelity_tradeoff = f.get<std::vector<double>>("fidelity_tradeoff", c.fidelity_tradeoff);
    c.costs = f.get<std::vector<double>>("costs", c.costs);
    if (f.has("surrogate")) c.surrogate = parse_kernel(f.sub("surrogate"), "testbed.surrogate");
    c.sigma2 = f.get<double>("sigma2", c.sigma2);
    c.B = f.get<double>("B", c.B);
    c.delta = f.get<double>("delta", c.delta);
    f.finish();
    require(!c.energy_caps.empty(), "aloha: no terminals");
    require(c.levels >= 2, "aloha: levels must be at least 2");
    require(c.sigma2 > 0.0, "aloha: sigma2 must be positive");
    require(c.fidelity_tradeoff.size() + 1 == c.costs.size(),
            "aloha: fidelity_tradeoff needs one entry per low fidelity");
    check_ladder(c.costs, kind);
    check_common(c.B, c.delta, static_cast<int>(c.energy_caps.size()), c.surrogate.fidelities(), c.costs.size(),
                 kind);
    return c;
  }
  throw ConfigError("testbed: unknown kind '" + kind + "' (expected synthetic, power or aloha)");
}

int players_of(const TestbedParams& t) {
  return std::visit(
      [](const auto& c) -> int {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SyntheticConfig>) return c.players;
        else if constexpr (std::is_same_v<T, PowerConfig>) return c.links;
        else return static_cast<int>(c.energy_caps.size());
      },
      t);
}

json testbed_json(const TestbedParams& t) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SyntheticConfig>) {
          return json{{"kind", "synthetic"},     {"players", c.players},
                      {"grid_points", c.grid_points}, {"generator", to_json(c.generator)},
                      {"surrogate", to_json(c.surrogate)}, {"costs", c.costs},
                      {"sigma2", c.sigma2},         {"B", c.B},
                      {"delta", c.delta}};
        } else if constexpr (std::is_same_v<T, PowerConfig>) {
          return json{{"kind", "power"},           {"links", c.links},
                      {"grid_points", c.grid_points}, {"min_db", c.min_db},
                      {"max_db", c.max_db},         {"noise_db", c.noise_db},
                      {"interference_db", c.interference_db}, {"penalty", c.penalty},
                      {"samples", c.samples},       {"truth_samples", c.truth_samples},
                      {"surrogate", to_json(c.surrogate)}, {"B", c.B},
                      {"delta", c.delta}};
        } else {
          return json{{"kind", "aloha"},
                      {"energy_caps", c.energy_caps},
                      {"levels", c.levels},
                      {"c1", c.c1},
                      {"c2", c.c2},
                      {"tradeoff", c.tradeoff},
                      {"fidelity_tradeoff", c.fidelity_tradeoff},
                      {"costs", c.costs},
                      {"surrogate", to_json(c.surrogate)},
                      {"sigma2", c.sigma2},
                      {"B", c.B},
                      {"delta", c.delta}};
        }
      },
      t);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string short_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("results.csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

std::uint64_t parse_uint(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("results.csv line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
}

std::string run_file_name(const Cell& c) {
  return std::string(to_string(c.policy)) + "_L" + short_number(c.lambda) + "_eta" + short_number(c.eta) + "_s" +
         std::to_string(c.seed) + ".json";
}

void ensure_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory " + p.string() + ": " + ec.message());
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  return os;
}

}  // namespace

// ------------------------------------------------------------------ config

std::string ExperimentConfig::testbed_kind() const {
  switch (testbed.index()) {
    case 0: return "synthetic";
    case 1: return "power";
    default: return "aloha";
  }
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < seed_count; ++i) s.push_back(first_seed + i);
  return s;
}

ExperimentConfig parse_config(const json& j) {
  Fields f(j, "config");
  ExperimentConfig c;
  c.name = f.get<std::string>("name", "experiment");
  c.testbed = parse_testbed(f.sub("testbed"));
  for (const auto& p : f.get<std::vector<std::string>>("policies")) {
    try {
      c.policies.push_back(policy_from_string(p));
    } catch (const std::exception&) {
      throw ConfigError("policies: unknown policy '" + p + "'");
    }
  }
  c.budgets = f.get<std::vector<double>>("budgets");
  c.etas = f.get<std::vector<double>>("etas");
  c.eta_grid = f.get<std::vector<double>>("eta_grid", {});
  if (f.has("seeds")) {
    Fields s(f.sub("seeds"), "seeds");
    c.first_seed = s.get<std::uint64_t>("first", 0);
    c.seed_count = s.get<std::size_t>("count");
    s.finish();
  }
  c.master_seed = f.get<std::uint64_t>("master_seed", 0);
  c.output = f.get<std::string>("output", c.output);
  c.pe_samples = f.get<int>("pe_samples", c.pe_samples);
  c.pool_size = f.get<std::size_t>("pool_size", c.pool_size);
  c.write_runs = f.get<bool>("write_runs", c.write_runs);
  c.dump_confidence = f.get<bool>("dump_confidence", c.dump_confidence);
  f.finish();

  require(!c.policies.empty(), "policies: at least one policy is required");
  require(!c.budgets.empty(), "budgets: at least one budget is required");
  for (double b : c.budgets) require(b > 0.0 && std::isfinite(b), "budgets: values must be positive");
  require(!c.etas.empty(), "etas: at least one threshold is required");
  for (double e : c.etas) require(e > 0.0 && e <= 1.0, "etas: values must lie in (0, 1]");
  for (double e : c.eta_grid) require(e > 0.0 && e <= 1.0, "eta_grid: values must lie in (0, 1]");
  require(c.seed_count >= 1, "seeds.count must be at least 1");
  require(c.pe_samples >= 1, "pe_samples must be at least 1");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json policies = json::array();
  for (auto p : c.policies) policies.push_back(std::string(to_string(p)));
  json j{{"name", c.name},
         {"testbed", testbed_json(c.testbed)},
         {"policies", policies},
         {"budgets", c.budgets},
         {"etas", c.etas},
         {"seeds", {{"first", c.first_seed}, {"count", c.seed_count}}},
         {"master_seed", c.master_seed},
         {"output", c.output},
         {"pe_samples", c.pe_samples},
         {"pool_size", c.pool_size},
         {"write_runs", c.write_runs},
         {"dump_confidence", c.dump_confidence}};
  if (!c.eta_grid.empty()) j["eta_grid"] = c.eta_grid;
  return j;
}

std::vector<std::string> preset_names() { return {"synthetic-n2", "synthetic-n10", "power", "aloha"}; }

const char* preset_text(const std::string& name) {
  if (name == "synthetic-n2") return detail::kPresetSyntheticN2;
  if (name == "synthetic-n10") return detail::kPresetSyntheticN10;
  if (name == "power") return detail::kPresetPower;
  if (name == "aloha") return detail::kPresetAloha;
  throw ConfigError("unknown preset '" + name + "'");
}

ExperimentConfig preset(const std::string& name) { return parse_config(json::parse(preset_text(name))); }

double budget_scale(const ExperimentConfig& config) {
  return std::visit(
      [](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SyntheticConfig>) return 1.0;
        else if constexpr (std::is_same_v<T, PowerConfig>) return static_cast<double>(c.samples.back());
        else return c.costs.back();
      },
      config.testbed);
}

std::uint64_t instance_seed(const ExperimentConfig& config, std::uint64_t seed) {
  return derive_seed(config.master_seed, 2 * seed);
}

std::uint64_t run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  return derive_seed(config.master_seed, 2 * seed + 1);
}

GameInstance build_instance(const ExperimentConfig& config, std::uint64_t seed) {
  const double budget = config.budgets.front();
  const double eta = config.etas.front();
  return std::visit(
      [&](const auto& c) -> GameInstance {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SyntheticConfig>)
          return make_synthetic_instance(c, budget, eta, instance_seed(config, seed));
        else if constexpr (std::is_same_v<T, PowerConfig>)
          return make_power_instance(c, budget, eta, config.master_seed);
        else
          return make_aloha_instance(c, budget, eta, config.master_seed);
      },
      config.testbed);
}

GameSpec cell_spec(const ExperimentConfig& config, const GameInstance& instance, double budget, double eta) {
  GameSpec spec = instance.spec;
  spec.Lambda = budget / budget_scale(config);
  spec.eta = eta;
  return spec;
}

// ------------------------------------------------------------------- cells

std::vector<Cell> enumerate_cells(const ExperimentConfig& config, const std::vector<double>& etas) {
  std::vector<Cell> cells;
  for (auto p : config.policies)
    for (double lambda : config.budgets)
      for (double eta : etas)
        for (auto seed : config.seeds()) cells.push_back(Cell{cells.size(), p, lambda, eta, seed});
  return cells;
}

std::string cell_run_key(const Cell& cell, int players) {
  std::ostringstream k;
  k << to_string(cell.policy) << '|' << format_number(cell.lambda) << '|' << cell.seed;
  if (cell.policy == PolicyId::mf_ucb_pne)
    k << '|' << static_cast<long long>(std::ceil(cell.eta * players - 1e-9));
  return k.str();
}

// ----------------------------------------------------------------- results

std::size_t ResultTable::failures() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.failed; }));
}

std::size_t ResultTable::budget_violations() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), violates_budget));
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return values[lo] + w * (values[hi] - values[lo]);
}

bool violates_budget(const ResultRow& row) {
  return !row.failed && row.spend > row.lambda * (1.0 + kBudgetTolerance);
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
  std::vector<AggregateRow> out;
  std::map<std::tuple<std::string, double, double>, std::size_t> index;
  std::vector<std::vector<double>> simple, cum;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.policy, r.lambda, r.eta);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      AggregateRow a;
      a.policy = r.policy;
      a.lambda = r.lambda;
      a.eta = r.eta;
      out.push_back(a);
      simple.emplace_back();
      cum.emplace_back();
    }
    auto& a = out[it->second];
    ++a.runs;
    if (r.failed) {
      ++a.failed;
      continue;
    }
    a.max_spend = std::max(a.max_spend, r.spend);
    if (violates_budget(r)) ++a.budget_violations;
    if (std::isfinite(r.simple_regret)) simple[it->second].push_back(r.simple_regret);
    if (std::isfinite(r.cum_regret)) cum[it->second].push_back(r.cum_regret);
  }
  auto fill = [&](const std::vector<double>& v, double& mean, double& p05, double& p95) {
    if (v.empty()) {
      mean = p05 = p95 = nan;
      return;
    }
    double s = 0.0;
    for (double x : v) s += x;
    mean = s / static_cast<double>(v.size());
    p05 = percentile(v, 0.05);
    p95 = percentile(v, 0.95);
  };
  for (std::size_t i = 0; i < out.size(); ++i) {
    fill(simple[i], out[i].simple_mean, out[i].simple_p05, out[i].simple_p95);
    fill(cum[i], out[i].cum_mean, out[i].cum_p05, out[i].cum_p95);
  }
  return out;
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows, bool include_wallclock) {
  os << kResultsHeader << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    os << r.policy << ',' << format_number(r.lambda) << ',' << format_number(r.eta) << ',' << r.seed << ',';
    if (r.failed) {
      os << "nan,nan,0,nan,";
    } else {
      os << format_number(r.simple_regret) << ',' << format_number(r.cum_regret) << ',' << r.episodes << ','
         << format_number(r.spend) << ',';
    }
    os << format_number(include_wallclock ? r.wallclock_ms : nan) << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("results.csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) throw ConfigError("results.csv: unexpected header '" + line + "'");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw ConfigError("results.csv line " + std::to_string(lineno) + ": expected 9 fields");
    ResultRow r;
    r.policy = f[0];
    r.lambda = parse_double(f[1], lineno);
    r.eta = parse_double(f[2], lineno);
    r.seed = parse_uint(f[3], lineno);
    r.simple_regret = parse_double(f[4], lineno);
    r.cum_regret = parse_double(f[5], lineno);
    r.episodes = parse_uint(f[6], lineno);
    r.spend = parse_double(f[7], lineno);
    r.wallclock_ms = parse_double(f[8], lineno);
    r.failed = std::isnan(r.spend);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  os << kSummaryHeader << '\n';
  for (const auto& a : rows) {
    os << a.policy << ',' << format_number(a.lambda) << ',' << format_number(a.eta) << ',' << a.runs << ','
       << a.failed << ',' << format_number(a.simple_mean) << ',' << format_number(a.simple_p05) << ','
       << format_number(a.simple_p95) << ',' << format_number(a.cum_mean) << ',' << format_number(a.cum_p05) << ','
       << format_number(a.cum_p95) << ',' << format_number(a.max_spend) << ',' << a.budget_violations << '\n';
  }
}

ResultRow make_row(const Cell& cell, const RunResult& result, double scale) {
  ResultRow r;
  r.policy = std::string(to_string(cell.policy));
  r.lambda = cell.lambda;
  r.eta = cell.eta;
  r.seed = cell.seed;
  r.simple_regret = result.degenerate ? std::numeric_limits<double>::quiet_NaN() : result.simple_regret;
  r.cum_regret = result.cumulative_regret;
  r.episodes = result.episodes.size();
  r.spend = result.spend * scale;
  r.wallclock_ms = result.wallclock_ms;
  return r;
}

json run_record(const RunResult& result, const GameInstance& instance, const Cell& cell, bool include_wallclock) {
  json j = to_json(result, include_wallclock);
  j["cell"] = {{"policy", std::string(to_string(cell.policy))},
               {"lambda", cell.lambda},
               {"eta", cell.eta},
               {"seed", cell.seed}};
  j["testbed"] = instance.testbed;
  j["instance_seed"] = instance.seed;
  if (!result.degenerate) {
    auto utilities = [&](ProfileIndex x) {
      std::vector<double> u;
      for (int n = 0; n < instance.spec.players(); ++n) u.push_back(instance.oracle->true_utility(n, x));
      return u;
    };
    j["last_profile"]["true_utilities"] = utilities(result.last_profile);
    j["last_profile"]["max_dissatisfaction"] = instance.table->max_f(result.last_profile);
    j["best_profile"]["true_utilities"] = utilities(result.best_profile);
    j["best_profile"]["max_dissatisfaction"] = instance.table->max_f(result.best_profile);
    if (const auto* power = dynamic_cast<const PowerOracle*>(instance.oracle.get())) {
      j["last_profile"]["sum_spectral_efficiency"] = power->sum_spectral_efficiency(result.last_profile);
      j["best_profile"]["sum_spectral_efficiency"] = power->sum_spectral_efficiency(result.best_profile);
    }
  }
  return j;
}

// -------------------------------------------------------------- execution

ResultTable run_cells(const ExperimentConfig& config, const std::vector<Cell>& cells, const RunOptions& options) {
  const int parallel = std::max(1, options.parallel);
  const double scale = budget_scale(config);

  // Instances, one per seed for drawn games and a single one otherwise.
  std::set<std::uint64_t> seed_set;
  for (const auto& c : cells) seed_set.insert(c.seed);
  const bool per_seed = config.testbed.index() == 0;
  std::map<std::uint64_t, std::shared_ptr<const GameInstance>> instances;
  {
    std::vector<std::uint64_t> seeds(seed_set.begin(), seed_set.end());
    if (!per_seed && !seeds.empty()) seeds.resize(1);
    std::vector<std::shared_ptr<const GameInstance>> built(seeds.size());
    std::string error;
#pragma omp parallel for schedule(dynamic) num_threads(parallel)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(seeds.size()); ++i) {
      try {
        built[static_cast<std::size_t>(i)] =
            std::make_shared<const GameInstance>(build_instance(config, seeds[static_cast<std::size_t>(i)]));
      } catch (const std::exception& e) {
#pragma omp critical(mfpne_instance_error)
        error = e.what();
      }
    }
    if (!error.empty()) throw ConfigError("instance construction failed: " + error);
    for (std::size_t i = 0; i < seeds.size(); ++i) instances[seeds[i]] = built[i];
  }
  auto instance_for = [&](std::uint64_t seed) { return per_seed ? instances.at(seed) : instances.begin()->second; };

  // Distinct runs.
  const int players = players_of(config.testbed);
  std::map<std::string, std::size_t> key_to_run;
  std::vector<std::size_t> cell_run(cells.size());
  std::vector<std::size_t> run_cell;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto key = cell_run_key(cells[i], players);
    auto [it, fresh] = key_to_run.emplace(key, run_cell.size());
    if (fresh) run_cell.push_back(i);
    cell_run[i] = it->second;
  }

  std::vector<std::optional<RunResult>> runs(run_cell.size());
  std::vector<std::string> errors(run_cell.size());
  PolicyOptions popts;
  popts.pe_samples = config.pe_samples;
  popts.pool_size = config.pool_size;
  popts.exec = parallel > 1 ? Execution::serial : Execution::parallel;
  std::size_t done = 0;

#pragma omp parallel for schedule(dynamic) num_threads(parallel)
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(run_cell.size()); ++r) {
    const Cell& cell = cells[run_cell[static_cast<std::size_t>(r)]];
    const auto inst = instance_for(cell.seed);
    PolicyOptions o = popts;
    o.keep_states = config.dump_confidence && cell.policy == PolicyId::mf_ucb_pne;
    try {
      const GameSpec spec = cell_spec(config, *inst, cell.lambda, cell.eta);
      runs[static_cast<std::size_t>(r)] =
          run_policy(cell.policy, spec, *inst->oracle, *inst->table, run_seed(config, cell.seed), o);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(r)] = e.what();
    }
#pragma omp critical(mfpne_progress)
    {
      ++done;
      if (options.progress)
        std::cerr << "[" << done << "/" << run_cell.size() << "] " << to_string(cell.policy) << " lambda="
                  << short_number(cell.lambda) << " eta=" << short_number(cell.eta) << " seed=" << cell.seed
                  << (errors[static_cast<std::size_t>(r)].empty() ? "" : " FAILED") << '\n';
      if (options.on_result && runs[static_cast<std::size_t>(r)])
        options.on_result(cell, *runs[static_cast<std::size_t>(r)]);
    }
  }

  ResultTable table;
  const std::filesystem::path out(config.output);
  const bool write = options.write_outputs && !config.output.empty();
  if (write) {
    ensure_dir(out);
    if (config.write_runs) ensure_dir(out / "runs");
    if (config.dump_confidence) ensure_dir(out / "states");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    const std::size_t r = cell_run[i];
    if (!runs[r]) {
      ResultRow row;
      row.policy = std::string(to_string(cell.policy));
      row.lambda = cell.lambda;
      row.eta = cell.eta;
      row.seed = cell.seed;
      row.failed = true;
      row.error = errors[r];
      row.simple_regret = row.cum_regret = row.spend = std::numeric_limits<double>::quiet_NaN();
      table.rows.push_back(std::move(row));
      continue;
    }
    RunResult result = *runs[r];
    result.spec.eta = cell.eta;
    table.rows.push_back(make_row(cell, result, scale));
    if (write && config.write_runs) {
      auto os = open_out(out / "runs" / run_file_name(cell));
      os << run_record(result, *instance_for(cell.seed), cell).dump(1) << '\n';
    }
    if (write && config.dump_confidence && !result.states.empty()) {
      auto name = run_file_name(cell);
      name.replace(name.size() - 5, 5, ".csv");
      auto os = open_out(out / "states" / name);
      result.states.back().write_csv(os, result.spec.space);
    }
  }
  table.aggregates = aggregate(table.rows);

  if (write) {
    {
      auto os = open_out(out / "results.csv");
      write_results_csv(os, table.rows);
    }
    {
      auto os = open_out(out / "summary.csv");
      write_summary_csv(os, table.aggregates);
    }
    if (table.failures()) {
      auto os = open_out(out / "failures.csv");
      os << "policy,lambda,eta,seed,error\n";
      for (const auto& row : table.rows) {
        if (!row.failed) continue;
        std::string msg = row.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        os << row.policy << ',' << format_number(row.lambda) << ',' << format_number(row.eta) << ',' << row.seed
           << ',' << msg << '\n';
      }
    }
  }
  return table;
}

ResultTable run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  return run_cells(config, enumerate_cells(config, config.etas), options);
}

// ------------------------------------------------------------- eta search

EtaSearchResult eta_surface(const std::vector<ResultRow>& rows) {
  const std::string mf(to_string(PolicyId::mf_ucb_pne));
  std::map<std::pair<double, double>, std::vector<double>> cells;
  for (const auto& r : rows)
    if (r.policy == mf && !r.failed && std::isfinite(r.simple_regret))
      cells[{r.lambda, r.eta}].push_back(r.simple_regret);

  EtaSearchResult out;
  for (const auto& [key, v] : cells) {
    SurfacePoint p;
    p.lambda = key.first;
    p.eta = key.second;
    p.runs = v.size();
    double s = 0.0;
    for (double x : v) s += x;
    p.mean = s / static_cast<double>(v.size());
    p.p05 = percentile(v, 0.05);
    p.p95 = percentile(v, 0.95);
    out.surface.push_back(p);
  }
  // Map order is (lambda, eta) ascending, so the first strict minimum is the smallest eta on ties.
  std::size_t i = 0;
  while (i < out.surface.size()) {
    std::size_t j = i, best = i;
    while (j < out.surface.size() && out.surface[j].lambda == out.surface[i].lambda) {
      if (out.surface[j].mean < out.surface[best].mean) best = j;
      ++j;
    }
    out.surface[best].best = true;
    out.best.push_back(EtaChoice{out.surface[best].lambda, out.surface[best].eta, out.surface[best].mean});
    i = j;
  }
  return out;
}

void write_surface_csv(std::ostream& os, const std::vector<SurfacePoint>& surface) {
  os << kSurfaceHeader << '\n';
  for (const auto& p : surface)
    os << format_number(p.lambda) << ',' << format_number(p.eta) << ',' << p.runs << ',' << format_number(p.mean)
       << ',' << format_number(p.p05) << ',' << format_number(p.p95) << ',' << (p.best ? 1 : 0) << '\n';
}

EtaSearchResult eta_search(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentConfig c = config;
  c.policies = {PolicyId::mf_ucb_pne};
  const auto& grid = config.eta_grid.empty() ? config.etas : config.eta_grid;
  ResultTable table = run_cells(c, enumerate_cells(c, grid), options);
  EtaSearchResult out = eta_surface(table.rows);
  out.table = std::move(table);
  if (options.write_outputs && !config.output.empty()) {
    auto os = open_out(std::filesystem::path(config.output) / "surface.csv");
    write_surface_csv(os, out.surface);
  }
  return out;
}

std::vector<AggregateRow> summarize(const std::vector<std::vector<ResultRow>>& tables) {
  if (tables.empty()) throw ConfigError("summarize: no input tables");
  std::vector<ResultRow> all;
  for (const auto& t : tables) all.insert(all.end(), t.begin(), t.end());
  return aggregate(all);
}

}  // namespace mfpne
