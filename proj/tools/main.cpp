#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mfpne/harness.hpp"
#include "mfpne/serialize.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kCellFailure = 1;
constexpr int kConfigError = 2;

struct Common {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  int parallel = 1;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("config", c.config_path, "Experiment config (JSON)");
  cmd->add_option("--preset", c.preset, "Bundled preset")
      ->check(CLI::IsMember(mfpne::preset_names()));
  cmd->add_option("--seed", c.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", c.out, "Output directory (overrides the config)");
  cmd->add_option("--parallel", c.parallel, "Cells run concurrently")->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", c.quiet, "No progress lines");
}

mfpne::ExperimentConfig resolve(const Common& c) {
  if (c.config_path.empty() == c.preset.empty())
    throw mfpne::ConfigError("give exactly one of a config path or --preset");
  auto config = c.preset.empty() ? mfpne::load_config(c.config_path) : mfpne::preset(c.preset);
  if (c.seed) config.master_seed = *c.seed;
  if (!c.out.empty()) config.output = c.out;
  return config;
}

mfpne::RunOptions run_options(const Common& c) {
  mfpne::RunOptions o;
  o.parallel = c.parallel;
  o.progress = !c.quiet;
  return o;
}

int report(const mfpne::ResultTable& t) {
  if (t.failures()) {
    std::cerr << t.failures() << " cell(s) failed:\n";
    for (const auto& r : t.rows)
      if (r.failed)
        std::cerr << "  " << r.policy << " lambda=" << r.lambda << " eta=" << r.eta << " seed=" << r.seed << ": "
                  << r.error << '\n';
  }
  if (t.budget_violations()) std::cerr << t.budget_violations() << " budget violation(s)\n";
  return t.failures() || t.budget_violations() ? kCellFailure : kOk;
}

void print_summary(const std::vector<mfpne::AggregateRow>& rows) {
  std::cout << "policy            lambda      eta   runs  simple_mean   [p05, p95]\n";
  for (const auto& a : rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s %8g %8g %6zu  %11.5g   [%.4g, %.4g]%s\n", a.policy.c_str(), a.lambda,
                  a.eta, a.runs, a.simple_mean, a.simple_p05, a.simple_p95,
                  a.budget_violations ? "  BUDGET VIOLATION" : "");
    std::cout << buf;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity pure Nash equilibrium learning experiments"};
  app.require_subcommand(1);

  Common run_args, eta_args, dump_args;
  bool print_config = false;
  auto* run = app.add_subcommand("run", "Run every (policy, budget, eta, seed) cell of a config");
  add_common(run, run_args);
  run->add_flag("--print-config", print_config, "Print the resolved config and exit");

  auto* eta = app.add_subcommand("eta-search", "Sweep MF-UCB-PNE over the eta grid and write surface.csv");
  add_common(eta, eta_args);

  std::vector<std::string> tables;
  std::string summary_out;
  auto* sum = app.add_subcommand("summarize", "Aggregate one or more results.csv files");
  sum->add_option("tables", tables, "results.csv files")->required()->check(CLI::ExistingFile);
  sum->add_option("--out", summary_out, "Write summary.csv into this directory");

  auto* dump = app.add_subcommand("dump-instance", "Write the instance JSON and dissatisfaction table of a seed");
  add_common(dump, dump_args);
  std::uint64_t instance = 0;
  dump->add_option("--instance", instance, "Seed index of the instance (default 0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      auto config = resolve(run_args);
      if (print_config) {
        std::cout << mfpne::to_json(config).dump(2) << '\n';
        return kOk;
      }
      const auto table = mfpne::run_experiment(config, run_options(run_args));
      print_summary(table.aggregates);
      std::cerr << "wrote " << config.output << "/results.csv\n";
      return report(table);
    }
    if (*eta) {
      auto config = resolve(eta_args);
      const auto result = mfpne::eta_search(config, run_options(eta_args));
      for (const auto& b : result.best)
        std::cout << "lambda=" << b.lambda << " best_eta=" << b.eta << " mean_simple_regret=" << b.mean << '\n';
      std::cerr << "wrote " << config.output << "/surface.csv\n";
      return report(result.table);
    }
    if (*sum) {
      std::vector<std::vector<mfpne::ResultRow>> rows;
      for (const auto& path : tables) {
        std::ifstream is(path);
        if (!is) throw mfpne::ConfigError("cannot open " + path);
        try {
          rows.push_back(mfpne::read_results_csv(is));
        } catch (const mfpne::ConfigError& e) {
          throw mfpne::ConfigError(path + ": " + e.what());
        }
      }
      const auto agg = mfpne::summarize(rows);
      if (summary_out.empty()) {
        mfpne::write_summary_csv(std::cout, agg);
      } else {
        std::filesystem::create_directories(summary_out);
        std::ofstream os(std::filesystem::path(summary_out) / "summary.csv");
        mfpne::write_summary_csv(os, agg);
        print_summary(agg);
      }
      std::size_t violations = 0;
      for (const auto& a : agg) violations += a.budget_violations;
      if (violations) {
        std::cerr << violations << " budget violation(s)\n";
        return kCellFailure;
      }
      return kOk;
    }
    if (*dump) {
      auto config = resolve(dump_args);
      const auto seed = config.first_seed + instance;
      const auto inst = mfpne::build_instance(config, seed);
      const std::filesystem::path out(config.output);
      std::filesystem::create_directories(out);
      {
        std::ofstream os(out / "instance.json");
        auto j = mfpne::instance_json(inst);
        j["spec"]["Lambda"] = nullptr;
        j["spec"]["eta"] = nullptr;
        j["config"] = mfpne::to_json(config);
        os << j.dump(2) << '\n';
      }
      if (inst.table->dense()) {
        std::ofstream os(out / "dissatisfaction.csv");
        inst.table->write_csv(os);
      }
      std::cerr << "wrote " << (out / "instance.json").string() << '\n';
      return kOk;
    }
  } catch (const mfpne::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCellFailure;
  }
  return kOk;
}
