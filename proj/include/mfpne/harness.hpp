#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "mfpne/policies.hpp"
#include "mfpne/testbeds.hpp"

namespace mfpne {

/// Invalid or unreadable experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TestbedParams = std::variant<SyntheticConfig, PowerConfig, AlohaConfig>;

struct ExperimentConfig {
  std::string name;
  TestbedParams testbed;
  std::vector<PolicyId> policies;
  /// Budgets in the testbed's raw cost units.
  std::vector<double> budgets;
  std::vector<double> etas;
  /// Grid used by eta-search; falls back to `etas` when empty.
  std::vector<double> eta_grid;
  std::uint64_t first_seed = 0;
  std::size_t seed_count = 1;
  std::uint64_t master_seed = 0;
  std::string output = "out";
  int pe_samples = 64;
  std::size_t pool_size = 0;
  bool write_runs = true;
  /// Writes the last episode's confidence state of every MF-UCB-PNE run.
  bool dump_confidence = false;

  std::string testbed_kind() const;
  std::vector<std::uint64_t> seeds() const;
};

/// Strict parse: unknown keys, missing required keys and invalid values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
ExperimentConfig preset(const std::string& name);
const char* preset_text(const std::string& name);

/// Raw budget units per normalised budget unit (the top-fidelity raw cost).
double budget_scale(const ExperimentConfig& config);

/// Game instance used by every cell of `seed`. Synthetic games are drawn per
/// seed; power and ALOHA games are fixed and only observation noise varies.
GameInstance build_instance(const ExperimentConfig& config, std::uint64_t seed);
std::uint64_t instance_seed(const ExperimentConfig& config, std::uint64_t seed);
std::uint64_t run_seed(const ExperimentConfig& config, std::uint64_t seed);

/// `instance` with its budget and threshold replaced.
GameSpec cell_spec(const ExperimentConfig& config, const GameInstance& instance, double budget, double eta);

struct Cell {
  std::size_t index = 0;
  PolicyId policy = PolicyId::mf_ucb_pne;
  double lambda = 0.0;
  double eta = 0.0;
  std::uint64_t seed = 0;
};

/// Cells ordered by policy, budget, eta, seed.
std::vector<Cell> enumerate_cells(const ExperimentConfig& config, const std::vector<double>& etas);

/// Cells whose runs coincide share a key: baselines ignore eta, and
/// MF-UCB-PNE depends on eta only through ceil(eta N).
std::string cell_run_key(const Cell& cell, int players);

struct ResultRow {
  std::string policy;
  double lambda = 0.0;
  double eta = 0.0;
  std::uint64_t seed = 0;
  double simple_regret = 0.0;
  double cum_regret = 0.0;
  std::size_t episodes = 0;
  /// Raw units, comparable with `lambda`.
  double spend = 0.0;
  double wallclock_ms = 0.0;
  bool failed = false;
  std::string error;
};

struct AggregateRow {
  std::string policy;
  double lambda = 0.0;
  double eta = 0.0;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double simple_mean = 0.0, simple_p05 = 0.0, simple_p95 = 0.0;
  double cum_mean = 0.0, cum_p05 = 0.0, cum_p95 = 0.0;
  double max_spend = 0.0;
  std::size_t budget_violations = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;

  std::size_t failures() const;
  std::size_t budget_violations() const;
};

/// Linear-interpolation percentile, q in [0, 1]. Throws on empty input.
double percentile(std::vector<double> values, double q);

bool violates_budget(const ResultRow& row);

/// One aggregate per (policy, lambda, eta) in first-appearance order; failed rows are counted, not averaged.
std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);

inline constexpr const char* kResultsHeader =
    "policy,lambda,eta,seed,simple_regret,cum_regret,episodes,spend,wallclock_ms";
inline constexpr const char* kSummaryHeader =
    "policy,lambda,eta,runs,failed,simple_regret_mean,simple_regret_p05,simple_regret_p95,"
    "cum_regret_mean,cum_regret_p05,cum_regret_p95,max_spend,budget_violations";
inline constexpr const char* kSurfaceHeader = "lambda,eta,runs,simple_regret_mean,simple_regret_p05,simple_regret_p95,best";

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows, bool include_wallclock = true);
/// Throws ConfigError on a header or field mismatch.
std::vector<ResultRow> read_results_csv(std::istream& is);
void write_summary_csv(std::ostream& os, const std::vector<AggregateRow>& rows);

ResultRow make_row(const Cell& cell, const RunResult& result, double budget_scale);

struct RunOptions {
  /// Concurrent cells. With more than one, each run executes serially.
  int parallel = 1;
  bool write_outputs = true;
  bool progress = false;
  /// Called once per computed run, serialised across threads.
  std::function<void(const Cell&, const RunResult&)> on_result;
};

/// Executes every cell and writes runs/*.json, results.csv and summary.csv
/// under config.output. Instance construction errors throw ConfigError; cell
/// errors are recorded in their rows.
ResultTable run_experiment(const ExperimentConfig& config, const RunOptions& options = {});
ResultTable run_cells(const ExperimentConfig& config, const std::vector<Cell>& cells, const RunOptions& options);

struct SurfacePoint {
  double lambda = 0.0;
  double eta = 0.0;
  std::size_t runs = 0;
  double mean = 0.0, p05 = 0.0, p95 = 0.0;
  bool best = false;
};

struct EtaChoice {
  double lambda = 0.0;
  double eta = 0.0;
  double mean = 0.0;
};

struct EtaSearchResult {
  std::vector<SurfacePoint> surface;
  std::vector<EtaChoice> best;
  ResultTable table;
};

/// Mean simple regret of MF-UCB-PNE rows per (lambda, eta) and the minimising
/// eta per lambda (smallest eta on ties).
EtaSearchResult eta_surface(const std::vector<ResultRow>& rows);

/// Runs MF-UCB-PNE over the eta grid and writes results.csv and surface.csv.
EtaSearchResult eta_search(const ExperimentConfig& config, const RunOptions& options = {});

void write_surface_csv(std::ostream& os, const std::vector<SurfacePoint>& surface);

/// Aggregates of the concatenated tables. All tables must share the results schema.
std::vector<AggregateRow> summarize(const std::vector<std::vector<ResultRow>>& tables);

/// Per-run record with the truth of the returned profiles added.
nlohmann::json run_record(const RunResult& result, const GameInstance& instance, const Cell& cell,
                          bool include_wallclock = true);

}  // namespace mfpne
