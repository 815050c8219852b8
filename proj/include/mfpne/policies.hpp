#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "mfpne/decision.hpp"
#include "mfpne/equilibrium.hpp"
#include "mfpne/game.hpp"
#include "mfpne/surrogate.hpp"

namespace mfpne {

enum class PolicyId { mf_ucb_pne, ucb_pne, pe };

std::string_view to_string(PolicyId p);
PolicyId policy_from_string(std::string_view s);

struct PolicyOptions {
  /// Posterior draws per player and column for PE.
  int pe_samples = 64;
  /// 0 tracks every grid profile; otherwise a seeded random pool of this many
  /// profiles, grown by every evaluated and exploring profile.
  std::size_t pool_size = 0;
  Execution exec = Execution::parallel;
  /// Keep the confidence state of every episode (memory heavy).
  bool keep_states = false;
};

struct RunResult {
  PolicyId policy = PolicyId::mf_ucb_pne;
  std::uint64_t seed = 0;
  GameSpec spec;
  std::vector<EpisodeLog> episodes;
  /// After each episode.
  std::vector<double> cumulative_regret_trace;
  std::vector<double> simple_regret_trace;
  double cumulative_regret = 0.0;
  double simple_regret = 0.0;
  double spend = 0.0;
  double eps_star = 0.0;
  /// True when the budget could not pay for a single evaluation step.
  bool degenerate = false;
  ProfileIndex last_profile = 0;
  ProfileIndex best_profile = 0;
  double wallclock_ms = 0.0;
  std::vector<ConfidenceState> states;

  std::size_t evaluation_steps() const { return episodes.size(); }
  std::size_t exploration_steps() const {
    std::size_t s = 0;
    for (const auto& e : episodes) s += e.exploration.size();
    return s;
  }
};

RunResult run_mf_ucb_pne(const GameSpec& spec, const UtilityOracle& oracle, const DissatisfactionTable& table,
                         std::uint64_t seed, const PolicyOptions& options = {});
RunResult run_ucb_pne(const GameSpec& spec, const UtilityOracle& oracle, const DissatisfactionTable& table,
                      std::uint64_t seed, const PolicyOptions& options = {});
RunResult run_pe(const GameSpec& spec, const UtilityOracle& oracle, const DissatisfactionTable& table,
                 std::uint64_t seed, const PolicyOptions& options = {});
RunResult run_policy(PolicyId policy, const GameSpec& spec, const UtilityOracle& oracle,
                     const DissatisfactionTable& table, std::uint64_t seed, const PolicyOptions& options = {});

struct ReturnedSolution {
  ProfileIndex last_profile = 0;
  ProfileIndex best_profile = 0;
};

/// Last evaluated profile and the evaluated profile of least true max dissatisfaction.
/// Throws std::logic_error for a degenerate run.
ReturnedSolution returned_solution(const RunResult& result);

/// Fraction of posterior draws in which each candidate is a pure equilibrium
/// of the sampled top-fidelity utilities, restricted to candidate columns.
///
/// For each player and each opponent context x_{-n} among the candidates,
/// `samples` joint draws are taken over that player's column; candidate x
/// counts in draw s when x_n is the draw-s argmax of every player's column.
std::vector<double> pe_scores(const SurrogateSet& surrogates, int samples, std::uint64_t seed,
                              Execution exec = Execution::parallel);

/// Seeded candidate pool of `size` distinct profiles (the whole grid if smaller).
std::vector<ProfileIndex> sample_profile_pool(const ProfileSpace& space, std::size_t size, std::uint64_t seed);

}  // namespace mfpne
