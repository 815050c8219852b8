// Acceptance checks P1-P12. Prints one PASS/FAIL line per property and exits
// nonzero if any property fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "mfpne/acquisition.hpp"
#include "mfpne/harness.hpp"
#include "mfpne/serialize.hpp"
#include "support.hpp"

using namespace mfpne;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& detail, double seconds) {
  std::printf("%s %s  %s  (%.1f s)\n", id, ok ? "PASS" : "FAIL", detail.c_str(), seconds);
  std::fflush(stdout);
  failures += !ok;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ------------------------------------------------------------ P5 bookkeeping

struct InvariantLog {
  std::size_t runs = 0;
  std::size_t budget_violations = 0;
  std::size_t exploration_all_top = 0;
  std::size_t evaluation_not_top = 0;
  std::size_t ratio_violations = 0;
  std::size_t sequences = 0;
  double worst_ratio_margin = INFINITY;

  bool ok() const {
    return runs >= 500 && budget_violations == 0 && exploration_all_top == 0 && evaluation_not_top == 0 &&
           ratio_violations == 0;
  }
};

InvariantLog invariants;

/// Checks one finished run. Episode-start models are rebuilt from the logged
/// observations so every retained exploration sequence (and each prefix) is
/// re-scored with the dense information-ratio rule.
void check_run(const RunResult& r) {
  const GameSpec& spec = r.spec;
  const int N = spec.players();
  const int M = spec.fidelities();
  ++invariants.runs;
  if (r.spend > spec.Lambda + kBudgetTolerance) ++invariants.budget_violations;
  double total = 0.0;
  std::vector<MogpModel> models(static_cast<std::size_t>(N), MogpModel(spec.kernel, spec.sigma2));
  auto record = [&](const StepRecord& s) {
    for (int n = 0; n < N; ++n)
      models[static_cast<std::size_t>(n)].append({spec.space.features(s.decision.profile),
                                                  s.decision.fidelities[static_cast<std::size_t>(n)],
                                                  s.observations[static_cast<std::size_t>(n)]});
  };
  for (const auto& e : r.episodes) {
    total += e.spend;
    if (!e.evaluation.decision.all_top(M)) ++invariants.evaluation_not_top;
    std::vector<DecisionPair> seq;
    BudgetLedger ledger(spec.Lambda);
    ledger.remaining_episode_start = e.budget_at_start;
    for (const auto& s : e.exploration) {
      if (s.decision.all_top(M)) ++invariants.exploration_all_top;
      seq.push_back(s.decision);
      if (check_stop_mi_ratio(models, spec, seq, ledger)) ++invariants.ratio_violations;
    }
    if (!seq.empty()) {
      ++invariants.sequences;
      double info = 0.0, cost = 0.0;
      for (int n = 0; n < N; ++n) {
        std::vector<QueryPoint> q;
        for (const auto& d : seq) q.push_back({spec.space.features(d.profile), d.fidelities[static_cast<std::size_t>(n)]});
        info += mutual_information_sequence(models[static_cast<std::size_t>(n)], q);
      }
      for (const auto& d : seq) cost += d.cost(spec.costs);
      invariants.worst_ratio_margin = std::min(invariants.worst_ratio_margin, info / cost * std::sqrt(e.budget_at_start));
    }
    for (const auto& s : e.exploration) record(s);
    record(e.evaluation);
  }
  if (total > spec.Lambda + kBudgetTolerance) ++invariants.budget_violations;
}

RunOptions checked_options() {
  RunOptions o;
  o.write_outputs = false;
  o.on_result = [](const Cell&, const RunResult& r) { check_run(r); };
  return o;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Mean of a column over rows of one (policy, lambda, eta) cell.
double cell_mean(const ResultTable& t, const std::string& policy, double lambda, double ResultRow::*field) {
  std::vector<double> v;
  for (const auto& r : t.rows)
    if (r.policy == policy && r.lambda == lambda && !r.failed) v.push_back(r.*field);
  return v.empty() ? NAN : mean(v);
}

ExperimentConfig synthetic_n2(std::vector<PolicyId> policies, std::vector<double> budgets, std::uint64_t master) {
  ExperimentConfig c = preset("synthetic-n2");
  c.policies = std::move(policies);
  c.budgets = std::move(budgets);
  c.first_seed = 0;
  c.seed_count = 20;
  c.master_seed = master;
  c.write_runs = false;
  return c;
}

// ------------------------------------------------------------------- P1-P3

void p1() {
  Timer t;
  std::mt19937_64 rng(101);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int M = 1 + rep % 4;
    const KernelParams p = support::random_params(M, rng);
    MogpModel model(p, 0.1);
    std::vector<support::Point> pts;
    const int n = 1 + static_cast<int>(rng() % 20);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      pts.push_back({support::random_point(2, rng), 1 + static_cast<int>(rng() % static_cast<unsigned>(M))});
      y[i] = g(rng);
      model.append({pts.back().x, pts.back().m, y[i]});
    }
    std::vector<support::Point> q;
    for (int i = 0; i < 10; ++i) q.push_back({support::random_point(2, rng), 1 + i % M});
    const auto dense = support::condition(p, 0.1, pts, y, q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Posterior post = model.posterior(q[i].x, q[i].m);
      const auto k = static_cast<Eigen::Index>(i);
      worst = std::max({worst, std::abs(post.mean - dense.mean[k]), std::abs(post.variance - dense.cov(k, k))});
    }
  }
  report("P1", worst <= 1e-8 && t.seconds() < 60, fmt("max abs error %.3g over 100 instances", worst), t.seconds());
}

void p2() {
  Timer t;
  std::mt19937_64 rng(102);
  const KernelParams sets[] = {KernelParams::uniform(2, 0.89, 0.78, 0.768), KernelParams::uniform(4, 1.08, 0.41, 0.797)};
  double min_eig = INFINITY, diag_err = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const KernelParams& p = sets[rep % 2];
    const int dim = rep % 2 ? 10 : 2;
    std::vector<support::Point> pts;
    for (int i = 0; i < 50; ++i)
      pts.push_back({support::random_point(dim, rng), 1 + static_cast<int>(rng() % static_cast<unsigned>(p.fidelities()))});
    const FidelityKernel k(p);
    Eigen::MatrixXd gram(50, 50);
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 50; ++j)
        gram(i, j) = k((pts[static_cast<std::size_t>(i)].x - pts[static_cast<std::size_t>(j)].x).squaredNorm(),
                       pts[static_cast<std::size_t>(i)].m, pts[static_cast<std::size_t>(j)].m);
    diag_err = std::max(diag_err, (gram.diagonal().array() - 1.0).abs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
  }
  report("P2", min_eig >= -1e-8 && diag_err <= 1e-12 && t.seconds() < 60,
         fmt("min eigenvalue %.3g, max |diag - 1| %.3g", min_eig, diag_err), t.seconds());
}

void p3() {
  Timer t;
  std::mt19937_64 rng(103);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int M = 1 + rep % 4;
    const KernelParams p = support::random_params(M, rng);
    MogpModel model(p, 0.1);
    std::vector<support::Point> data;
    for (int i = 0; i < rep % 10; ++i) {
      data.push_back({support::random_point(2, rng), 1 + i % M});
      model.append({data.back().x, data.back().m, g(rng)});
    }
    std::vector<support::Point> seq_pts;
    std::vector<QueryPoint> seq;
    for (int i = 0; i < 1 + rep % 5; ++i) {
      seq_pts.push_back({support::random_point(2, rng), 1 + (i + rep) % M});
      seq.push_back({seq_pts.back().x, seq_pts.back().m});
    }
    const double ref = support::dense_sequence_information(p, 0.1, data, seq_pts);
    worst = std::max(worst, std::abs(mutual_information_sequence(model, seq) - ref));
  }
  report("P3", worst <= 1e-8 && t.seconds() < 60, fmt("max abs error %.3g over 50 sequences", worst), t.seconds());
}

// ------------------------------------------------------------------------ P4

void p4() {
  Timer t;
  const int instances = 200;
  const double delta = 0.1;
  int utility_ok = 0, dissatisfaction_ok = 0;
  ExperimentConfig c = synthetic_n2({PolicyId::mf_ucb_pne}, {64}, 4);
  PolicyOptions opt;
  opt.keep_states = true;
  opt.exec = Execution::serial;
  for (int i = 0; i < instances; ++i) {
    const auto seed = static_cast<std::uint64_t>(i);
    const GameInstance inst = build_instance(c, seed);
    const GameSpec spec = cell_spec(c, inst, 64.0, 0.5);
    const RunResult r = run_mf_ucb_pne(spec, *inst.oracle, *inst.table, run_seed(c, seed), opt);
    check_run(r);
    bool u_ok = true, f_ok = true;
    for (const auto& st : r.states)
      for (std::size_t k = 0; k < st.size() && (u_ok || f_ok); ++k)
        for (int n = 0; n < spec.players(); ++n) {
          const auto nn = static_cast<std::size_t>(n);
          const double u = inst.oracle->true_utility(n, st.profiles[k]);
          if (u < st.u_lo[nn][k] || u > st.u_hi[nn][k]) u_ok = false;
          const double f = inst.table->f(n, st.profiles[k]);
          if (f < st.f_lo[nn][k] || f > st.f_hi[nn][k]) f_ok = false;
        }
    utility_ok += u_ok;
    dissatisfaction_ok += f_ok;
  }
  const double floor = 1.0 - delta - 3.0 * std::sqrt(delta * (1.0 - delta) / instances);
  const double fu = static_cast<double>(utility_ok) / instances;
  const double ff = static_cast<double>(dissatisfaction_ok) / instances;
  report("P4", fu >= floor && ff >= floor && t.seconds() < 1200,
         fmt("utility coverage %.3f, dissatisfaction coverage %.3f, required >= %.4f", fu, ff, floor), t.seconds());
}

// ------------------------------------------------------------------------ P6

void p6() {
  Timer t;
  SyntheticConfig sc;
  sc.grid_points = 32;
  sc.generator = KernelParams::uniform(1, 0.89, 0.78, 0.768);
  sc.surrogate = sc.generator;
  sc.costs = {1.0};
  int identical = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GameInstance inst = make_synthetic_instance(sc, 64.0, 0.5, derive_seed(6, seed));
    PolicyOptions opt;
    opt.exec = Execution::serial;
    const RunResult a = run_mf_ucb_pne(inst.spec, *inst.oracle, *inst.table, seed, opt);
    const RunResult b = run_ucb_pne(inst.spec, *inst.oracle, *inst.table, seed, opt);
    check_run(a);
    check_run(b);
    auto trace = [&](const RunResult& r) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& e : r.episodes) {
        auto ej = to_json(e, inst.spec.space);
        nlohmann::json d;
        d["exploration"] = ej["exploration"];
        d["evaluation"] = ej["evaluation"];
        j.push_back(d);
      }
      return j.dump();
    };
    identical += trace(a) == trace(b) && !a.episodes.empty();
  }
  report("P6", identical == 20, fmt("%d/20 seeds with byte-identical decision traces", identical), t.seconds());
}

// ------------------------------------------------------------------- P7, P12

void p7_p12() {
  Timer t;
  const ExperimentConfig c = synthetic_n2({PolicyId::mf_ucb_pne, PolicyId::ucb_pne, PolicyId::pe}, {32, 128, 512}, 0);
  const ResultTable table = run_experiment(c, checked_options());
  const double mf32 = cell_mean(table, "mf-ucb-pne", 32, &ResultRow::simple_regret);
  const double mf128 = cell_mean(table, "mf-ucb-pne", 128, &ResultRow::simple_regret);
  const double mf512 = cell_mean(table, "mf-ucb-pne", 512, &ResultRow::simple_regret);
  const double ucb512 = cell_mean(table, "ucb-pne", 512, &ResultRow::simple_regret);
  const double pe512 = cell_mean(table, "pe", 512, &ResultRow::simple_regret);
  const bool decreasing = mf32 > mf128 && mf128 > mf512;
  const bool best = mf512 <= ucb512 && mf512 <= pe512;
  report("P7", decreasing && best && table.failures() == 0 && t.seconds() < 1800,
         fmt("MF mean simple regret %.4f > %.4f > %.4f; at 512 MF %.4f, UCB %.4f, PE %.4f", mf32, mf128, mf512, mf512,
             ucb512, pe512),
         t.seconds());

  const double r32 = cell_mean(table, "mf-ucb-pne", 32, &ResultRow::cum_regret) / 32.0;
  const double r512 = cell_mean(table, "mf-ucb-pne", 512, &ResultRow::cum_regret) / 512.0;
  report("P12", r512 < r32, fmt("mean R/Lambda %.4f at 32, %.4f at 512", r32, r512), 0.0);
}

// ------------------------------------------------------------------------ P8

void p8() {
  Timer t;
  int ok = 0;
  std::string picks;
  for (std::uint64_t sweep = 0; sweep < 10; ++sweep) {
    ExperimentConfig c = synthetic_n2({PolicyId::mf_ucb_pne}, {32, 512}, 100 + sweep);
    c.eta_grid = {0.25, 0.5, 0.75, 1.0};
    const EtaSearchResult r = eta_search(c, checked_options());
    double lo = NAN, hi = NAN;
    for (const auto& b : r.best) {
      if (b.lambda == 32.0) lo = b.eta;
      if (b.lambda == 512.0) hi = b.eta;
    }
    ok += hi >= lo;
    picks += fmt(" (%.2g,%.2g)", lo, hi);
  }
  report("P8", ok >= 6 && t.seconds() < 2700, fmt("%d/10 sweeps with best eta(512) >= best eta(32):%s", ok, picks.c_str()),
         t.seconds());
}

// ------------------------------------------------------------------------ P9

void p9() {
  Timer t;
  ExperimentConfig c = preset("aloha");
  c.budgets = {1000, 3000};
  c.etas = {0.2};
  c.first_seed = 0;
  c.seed_count = 20;
  c.write_runs = false;
  const AlohaConfig ac = std::get<AlohaConfig>(c.testbed);
  bool caps_ok = true;
  RunOptions o = checked_options();
  o.on_result = [&](const Cell&, const RunResult& r) {
    check_run(r);
    if (r.degenerate) return;
    for (ProfileIndex x : {r.last_profile, r.best_profile})
      for (int n = 0; n < r.spec.players(); ++n) {
        const auto& a = r.spec.space.grid(n).raw[r.spec.space.action(x, n)];
        if (aloha_energy(ac, a) > ac.energy_caps[static_cast<std::size_t>(n)]) caps_ok = false;
      }
  };
  const ResultTable table = run_experiment(c, o);
  std::map<std::uint64_t, std::map<std::string, double>> at3000;
  for (const auto& r : table.rows)
    if (r.lambda == 3000.0) at3000[r.seed][r.policy] = r.simple_regret;
  int wins = 0;
  for (auto& [seed, m] : at3000) wins += m["mf-ucb-pne"] < m["ucb-pne"] && m["mf-ucb-pne"] < m["pe"];
  const double frac = wins / 20.0;
  report("P9", frac >= 0.6 && caps_ok && table.failures() == 0 && t.seconds() < 1800,
         fmt("MF below both baselines in %d/20 seeds at 3000 (means MF %.4f, UCB %.4f, PE %.4f); energy caps %s", wins,
             cell_mean(table, "mf-ucb-pne", 3000, &ResultRow::simple_regret),
             cell_mean(table, "ucb-pne", 3000, &ResultRow::simple_regret),
             cell_mean(table, "pe", 3000, &ResultRow::simple_regret), caps_ok ? "respected" : "VIOLATED"),
         t.seconds());
}

// ----------------------------------------------------------------------- P10

void p10() {
  Timer t;
  PowerConfig c;
  c.links = 1;
  c.grid_points = 1;
  c.min_db = 0.0;
  c.max_db = 0.0;
  c.noise_db = 0.0;
  c.penalty = 0.1;
  c.truth_samples = 1000000;
  const GameInstance inst = make_power_instance(c, 300.0, 0.5, 10);
  const auto& o = dynamic_cast<const PowerOracle&>(*inst.oracle);
  const double closed = 0.596347362323194074 - c.penalty;  // e E1(1) - xi
  const double err = std::abs(o.true_utility(0, 0) - closed);
  const double se = o.truth_standard_error(0, 0);
  report("P10", err <= 3.0 * se, fmt("|truth - closed form| = %.3g, 3 SE = %.3g", err, 3.0 * se), t.seconds());
}

// ----------------------------------------------------------------------- P11

void p11() {
  Timer t;
  std::mt19937_64 rng(111);
  std::uniform_int_distribution<std::size_t> sz(1, 8);
  int equal = 0, planted_ok = 0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(1 + rep % 3));
    for (auto& s : sizes) s = sz(rng);
    const ProfileSpace space = support::scalar_space(sizes);
    const auto oracle = support::random_tabular(space, 1, rng);
    GameSpec spec;
    spec.space = space;
    spec.kernel = KernelParams::uniform(1, 1.0, 1.0, 0.5);
    equal += epsilon_star(*oracle, spec).value == support::brute_force_eps_star(*oracle, space);

    auto tables = oracle->tables();
    const ProfileIndex planted = static_cast<ProfileIndex>(rng() % space.profiles());
    for (int n = 0; n < space.players(); ++n) tables[static_cast<std::size_t>(n)][0][planted] = 10.0;
    const TabularOracle o(tables, 0.0);
    planted_ok += epsilon_star(o, spec).value == 0.0;
  }
  report("P11", equal == 50 && planted_ok == 50,
         fmt("%d/50 exact matches, %d/50 planted games with eps* = 0", equal, planted_ok), t.seconds());
}

}  // namespace

int main() {
  try {
    p1();
    p2();
    p3();
    p10();
    p11();
    p6();
    p4();
    p7_p12();
    p9();
    p8();
    report("P5", invariants.ok(),
           fmt("%zu runs, %zu budget violations, %zu all-top exploration steps, %zu non-top evaluations, "
               "%zu ratio-rule violations over %zu sequences (min ratio * sqrt(budget) %.4f)",
               invariants.runs, invariants.budget_violations, invariants.exploration_all_top,
               invariants.evaluation_not_top, invariants.ratio_violations, invariants.sequences,
               invariants.worst_ratio_margin),
           0.0);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d propert%s failed\n", failures, failures == 1 ? "y" : "ies");
  return failures == 0 ? 0 : 1;
}
