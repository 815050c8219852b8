#include "mfpne/policies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "mfpne/acquisition.hpp"
#include "mfpne/rng.hpp"

namespace mfpne {

std::string_view to_string(PolicyId p) {
  switch (p) {
    case PolicyId::mf_ucb_pne: return "mf-ucb-pne";
    case PolicyId::ucb_pne: return "ucb-pne";
    case PolicyId::pe: return "pe";
  }
  return "mf-ucb-pne";
}

PolicyId policy_from_string(std::string_view s) {
  for (auto p : {PolicyId::mf_ucb_pne, PolicyId::ucb_pne, PolicyId::pe})
    if (to_string(p) == s) return p;
  throw std::invalid_argument("unknown policy: " + std::string(s));
}

std::vector<ProfileIndex> sample_profile_pool(const ProfileSpace& space, std::size_t size, std::uint64_t seed) {
  const ProfileIndex P = space.profiles();
  std::vector<ProfileIndex> out;
  if (size == 0 || size >= P) {
    out.resize(static_cast<std::size_t>(P));
    std::iota(out.begin(), out.end(), ProfileIndex{0});
    return out;
  }
  Rng rng(seed);
  std::uniform_int_distribution<ProfileIndex> pick(0, P - 1);
  std::unordered_set<ProfileIndex> seen;
  while (out.size() < size) {
    const ProfileIndex x = pick(rng);
    if (seen.insert(x).second) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

constexpr std::uint64_t kPoolStream = 1000;
constexpr std::uint64_t kSampleStream = 2000;

std::vector<ProfileIndex> initial_candidates(const GameSpec& spec, std::uint64_t seed, const PolicyOptions& opt) {
  return sample_profile_pool(spec.space, opt.pool_size, derive_seed(seed, kPoolStream));
}

struct Run {
  const GameSpec& spec;
  const UtilityOracle& oracle;
  const DissatisfactionTable& table;
  const PolicyOptions& opt;
  RunResult result;
  SurrogateSet surrogates;
  BudgetLedger ledger;
  std::vector<Rng> rngs;
  GammaChain gamma;
  std::size_t steps = 0;
  double best_eps = std::numeric_limits<double>::infinity();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  static std::vector<Eigen::VectorXd> chain_points(const GameSpec& spec, const std::vector<ProfileIndex>& cands) {
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(cands.size());
    for (ProfileIndex x : cands) pts.push_back(spec.space.features(x));
    return pts;
  }

  Run(PolicyId id, const GameSpec& s, const UtilityOracle& o, const DissatisfactionTable& t, std::uint64_t seed,
      const PolicyOptions& options, const std::vector<ProfileIndex>& cands)
      : spec(s),
        oracle(o),
        table(t),
        opt(options),
        surrogates(s, cands, options.exec),
        ledger(s.Lambda),
        gamma(MogpModel(s.kernel, s.sigma2), chain_points(s, cands), options.exec) {
    spec.validate();
    result.policy = id;
    result.seed = seed;
    result.spec = s;
    result.eps_star = t.eps_star();
    for (int n = 0; n < s.players(); ++n) rngs.push_back(make_rng(seed, static_cast<std::uint64_t>(n) + 1));
  }

  bool can_evaluate() const { return ledger.remaining() + kBudgetTolerance >= spec.players(); }

  std::vector<double> betas(std::vector<double>& gammas) {
    const double g = gamma.value(steps + 1);
    gammas.assign(static_cast<std::size_t>(spec.players()), g);
    std::vector<double> b(static_cast<std::size_t>(spec.players()));
    for (auto& v : b) v = compute_beta(spec, g);
    return b;
  }

  void choose_ucb(EpisodeLog& log, ProfileIndex& chosen) {
    std::vector<double> gammas;
    const auto beta = betas(gammas);
    ConfidenceState state = build_confidence_state(surrogates, beta, gammas, opt.exec);
    const std::size_t rep = reported_profile(state);
    const ExploringChoice ex = exploring_profile(state, rep);
    log.reported = state.profiles[rep];
    log.exploring = ex.profile;
    log.worst_player = ex.worst_player;
    log.beta = beta;
    log.gamma = gammas;
    chosen = final_evaluation_profile(surrogates, log.reported, log.exploring);
    if (opt.keep_states) result.states.push_back(std::move(state));
  }

  void evaluate(EpisodeLog& log, ProfileIndex x) {
    const int N = spec.players();
    const int M = spec.fidelities();
    StepRecord step;
    step.decision = DecisionPair{x, std::vector<int>(static_cast<std::size_t>(N), M)};
    step.cost = N;
    step.observations.resize(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n)
      step.observations[static_cast<std::size_t>(n)] = oracle.observe(n, x, M, rngs[static_cast<std::size_t>(n)]);
    ledger.charge(step.cost);
    surrogates.record(step.decision, step.observations);
    ++steps;
    log.evaluation = std::move(step);
    log.spend = log.exploration_spend() + N;
    log.final_dissatisfaction = table.max_f(x);
    if (opt.pool_size > 0) {
      surrogates.add_candidate(x);
      surrogates.add_candidate(log.exploring);
    }
    log.index = result.episodes.size();
    result.episodes.push_back(std::move(log));
    best_eps = std::min(best_eps, result.episodes.back().final_dissatisfaction);
    result.simple_regret_trace.push_back(std::max(0.0, best_eps - table.eps_star()));
  }

  RunResult finish() {
    auto& r = result;
    r.degenerate = r.episodes.empty();
    r.spend = ledger.spent_total;
    if (!r.degenerate) {
      const RegretBreakdown rb = cumulative_regret(spec, table, r.episodes);
      double acc = 0.0;
      for (double v : rb.per_episode) r.cumulative_regret_trace.push_back(acc += v);
      r.cumulative_regret = rb.total;
      r.simple_regret = r.simple_regret_trace.back();
      const auto sol = returned_solution(r);
      r.last_profile = sol.last_profile;
      r.best_profile = sol.best_profile;
    }
    r.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return std::move(r);
  }
};

}  // namespace

RunResult run_mf_ucb_pne(const GameSpec& spec, const UtilityOracle& oracle, const DissatisfactionTable& table,
                         std::uint64_t seed, const PolicyOptions& options) {
  Run run(PolicyId::mf_ucb_pne, spec, oracle, table, seed, options, initial_candidates(spec, seed, options));
  while (run.can_evaluate()) {
    run.ledger.start_episode();
    EpisodeLog log;
    log.budget_at_start = run.ledger.remaining_episode_start;
    if (check_stop_insufficient(spec, run.ledger)) {
      log.stop_reason = StopReason::insufficient_budget;
    } else {
      ExplorationOutcome out = run_exploration_phase(run.surrogates, run.ledger, oracle, run.rngs);
      run.steps += out.steps.size();
      log.exploration = std::move(out.steps);
      log.stop_reason = out.stop_reason;
      log.exploration_information = out.total_information();
    }
    ProfileIndex x = 0;
    run.choose_ucb(log, x);
    run.evaluate(log, x);
  }
  return run.finish();
}

RunResult run_ucb_pne(const GameSpec& spec, const UtilityOracle& oracle, const DissatisfactionTable& table,
                      std::uint64_t seed, const PolicyOptions& options) {
  Run run(PolicyId::ucb_pne, spec, oracle, table, seed, options, initial_candidates(spec, seed, options));
  while (run.can_evaluate()) {
    run.ledger.start_episode();
    EpisodeLog log;
    log.budget_at_start = run.ledger.remaining_episode_start;
    ProfileIndex x = 0;
    run.choose_ucb(log, x);
    run.evaluate(log, x);
  }
  return run.finish();
}

RunResult run_pe(const GameSpec& spec, const UtilityOracle& oracle, const DissatisfactionTable& table,
                 std::uint64_t seed, const PolicyOptions& options) {
  Run run(PolicyId::pe, spec, oracle, table, seed, options, initial_candidates(spec, seed, options));
  while (run.can_evaluate()) {
    run.ledger.start_episode();
    EpisodeLog log;
    log.budget_at_start = run.ledger.remaining_episode_start;
    const auto scores = pe_scores(run.surrogates, options.pe_samples,
                                  derive_seed(derive_seed(seed, kSampleStream), run.steps), options.exec);
    const auto& cands = run.surrogates.candidates();
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
      if (scores[i] > scores[best]) best = i;
    log.reported = log.exploring = cands[best];
    run.evaluate(log, cands[best]);
  }
  return run.finish();
}

RunResult run_policy(PolicyId policy, const GameSpec& spec, const UtilityOracle& oracle,
                     const DissatisfactionTable& table, std::uint64_t seed, const PolicyOptions& options) {
  switch (policy) {
    case PolicyId::mf_ucb_pne: return run_mf_ucb_pne(spec, oracle, table, seed, options);
    case PolicyId::ucb_pne: return run_ucb_pne(spec, oracle, table, seed, options);
    case PolicyId::pe: return run_pe(spec, oracle, table, seed, options);
  }
  throw std::invalid_argument("run_policy: unknown policy");
}

ReturnedSolution returned_solution(const RunResult& result) {
  if (result.episodes.empty()) throw std::logic_error("returned_solution: run has no evaluation step");
  ReturnedSolution s;
  s.last_profile = result.episodes.back().evaluation.decision.profile;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : result.episodes) {
    if (e.final_dissatisfaction < best) {
      best = e.final_dissatisfaction;
      s.best_profile = e.evaluation.decision.profile;
    }
  }
  return s;
}

namespace {

/// Square-root factor R with R R^T = cov, via Cholesky with jitter or a
/// clamped eigendecomposition when the matrix is numerically singular.
Eigen::MatrixXd sample_factor(const Eigen::MatrixXd& cov) {
  try {
    return factorize_with_jitter(cov, {1e-10, 1e-4, 10.0}).lower;
  } catch (const NumericError&) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal();
  }
}

}  // namespace

std::vector<double> pe_scores(const SurrogateSet& surrogates, int samples, std::uint64_t seed, Execution exec) {
  if (samples < 1) throw std::invalid_argument("pe_scores: samples must be positive");
  const auto& space = surrogates.spec().space;
  const auto& cands = surrogates.candidates();
  const int N = surrogates.players();
  const std::size_t P = cands.size();
  const auto S = static_cast<std::size_t>(samples);
  std::vector<std::uint8_t> ok(P * S, 1);

  for (int n = 0; n < N; ++n) {
    std::vector<ProfileIndex> bases;
    std::vector<std::vector<std::size_t>> members;
    std::unordered_map<ProfileIndex, std::size_t> group_of;
    for (std::size_t i = 0; i < P; ++i) {
      const ProfileIndex base = space.with_action(cands[i], n, 0);
      auto [it, inserted] = group_of.emplace(base, bases.size());
      if (inserted) {
        bases.push_back(base);
        members.emplace_back();
      }
      members[it->second].push_back(i);
    }
    const auto& cache = surrogates.cache(n);
    const auto& kernel = surrogates.model(n).kernel();
    const std::uint64_t player_seed = derive_seed(seed, static_cast<std::uint64_t>(n));
    const auto G = static_cast<std::int64_t>(bases.size());

#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
    for (std::int64_t g = 0; g < G; ++g) {
      const auto column = space.column(bases[static_cast<std::size_t>(g)], n);
      const auto K = static_cast<Eigen::Index>(column.size());
      std::vector<std::size_t> slots(column.size());
      for (std::size_t a = 0; a < column.size(); ++a) slots[a] = static_cast<std::size_t>(surrogates.top_slot(column[a]));
      Eigen::VectorXd mean(K);
      Eigen::MatrixXd cov(K, K);
      for (Eigen::Index a = 0; a < K; ++a) {
        mean[a] = cache.mean(slots[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b <= a; ++b)
          cov(a, b) = cov(b, a) = cache.covariance(slots[static_cast<std::size_t>(a)], slots[static_cast<std::size_t>(b)], kernel);
      }
      const Eigen::MatrixXd R = sample_factor(cov);
      Rng rng(derive_seed(player_seed, static_cast<std::uint64_t>(g)));
      std::normal_distribution<double> z(0.0, 1.0);
      Eigen::VectorXd e(K);
      for (std::size_t s = 0; s < S; ++s) {
        for (Eigen::Index a = 0; a < K; ++a) e[a] = z(rng);
        const Eigen::VectorXd draw = mean + R * e;
        Eigen::Index arg = 0;
        draw.maxCoeff(&arg);
        for (std::size_t i : members[static_cast<std::size_t>(g)])
          if (space.action(cands[i], n) != static_cast<std::size_t>(arg)) ok[i * S + s] = 0;
      }
    }
  }

  std::vector<double> scores(P, 0.0);
  for (std::size_t i = 0; i < P; ++i) {
    std::size_t c = 0;
    for (std::size_t s = 0; s < S; ++s) c += ok[i * S + s];
    scores[i] = static_cast<double>(c) / static_cast<double>(S);
  }
  return scores;
}

}  // namespace mfpne
