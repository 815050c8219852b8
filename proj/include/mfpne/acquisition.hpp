#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mfpne/decision.hpp"
#include "mfpne/game.hpp"
#include "mfpne/mogp.hpp"
#include "mfpne/surrogate.hpp"

namespace mfpne {

/// Spend bookkeeping for one run.
struct BudgetLedger {
  double Lambda = 0.0;
  double spent_total = 0.0;
  double spent_episode = 0.0;
  /// Budget remaining when the current episode started.
  double remaining_episode_start = 0.0;

  explicit BudgetLedger(double budget = 0.0) : Lambda(budget), remaining_episode_start(budget) {}

  double remaining() const { return Lambda - spent_total; }
  void start_episode();
  /// Adds `cost`; throws IntegrityError if the total would exceed Lambda.
  void charge(double cost);
};

/// remaining < N (lambda_1 + 1).
bool check_stop_insufficient(const GameSpec& spec, const BudgetLedger& ledger);
bool check_stop_insufficient(const GameSpec& spec, double remaining);

/// (# players at the top fidelity) / N >= eta.
bool check_stop_fidelity_fraction(const DecisionPair& candidate, int fidelities, double eta);

/// information / cost < 1 / sqrt(budget_at_start).
bool mi_ratio_below(double information, double cost, double budget_at_start);

/// Reference form: dense joint information of `sequence` (candidate last)
/// under each player's episode-start model.
bool check_stop_mi_ratio(const std::vector<MogpModel>& models0, const GameSpec& spec,
                         const std::vector<DecisionPair>& sequence, const BudgetLedger& ledger);

struct FidelityChoice {
  std::vector<int> fidelities;
  double information = 0.0;
  double cost = 0.0;
  double ratio() const { return information / cost; }
};

/// Maximises sum_n info[n][m_n] / sum_n costs[m_n] over per-player fidelities
/// subject to sum_n costs[m_n] <= cap.
///
/// `info` is row-major N x M. The unconstrained maximum is found exactly by
/// Dinkelbach iteration (each player independently maximises
/// info - r cost for the current ratio r). If that choice breaks the cap,
/// players are downgraded greedily by smallest information lost per unit of
/// cost saved. Returns nullopt when even the cheapest vector breaks the cap.
std::optional<FidelityChoice> best_fidelities(std::span<const double> info, int players,
                                              const std::vector<double>& costs, double cap);

/// Argmax over candidate profiles and fidelity vectors of summed one-step
/// information per unit cost, with cost capped at remaining - N.
/// Ties keep the lowest profile index. nullopt when no vector is affordable.
std::optional<DecisionPair> select_exploration_pair(const SurrogateSet& surrogates, const BudgetLedger& ledger);

struct ExplorationOutcome {
  std::vector<StepRecord> steps;
  StopReason stop_reason = StopReason::none;
  /// Joint information of the retained sequence, per player.
  std::vector<double> information;
  double cost = 0.0;

  double total_information() const {
    double s = 0.0;
    for (double v : information) s += v;
    return s;
  }
};

/// Exploration phase of one episode: repeatedly select a candidate pair,
/// stop (discarding it) when the budget, fidelity-fraction or
/// information-ratio rule fires, otherwise query and commit it.
ExplorationOutcome run_exploration_phase(SurrogateSet& surrogates, BudgetLedger& ledger,
                                         const UtilityOracle& oracle, std::vector<Rng>& player_rngs);

}  // namespace mfpne
