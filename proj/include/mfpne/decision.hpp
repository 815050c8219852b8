#pragma once

#include <string_view>
#include <vector>

#include "mfpne/profile_space.hpp"

namespace mfpne {

enum class StopReason { none, insufficient_budget, fidelity_fraction, mi_ratio };

std::string_view to_string(StopReason r);
StopReason stop_reason_from_string(std::string_view s);

/// An action profile together with one fidelity level per player.
struct DecisionPair {
  ProfileIndex profile = 0;
  std::vector<int> fidelities;

  double cost(const std::vector<double>& ladder) const {
    double c = 0.0;
    for (int m : fidelities) c += ladder[static_cast<std::size_t>(m - 1)];
    return c;
  }
  int top_count(int M) const {
    int k = 0;
    for (int m : fidelities) k += m == M;
    return k;
  }
  bool all_top(int M) const { return top_count(M) == static_cast<int>(fidelities.size()); }

  bool operator==(const DecisionPair&) const = default;
};

/// One time step: the queried pair and the observation returned to each player.
struct StepRecord {
  DecisionPair decision;
  std::vector<double> observations;
  double cost = 0.0;
};

struct EpisodeLog {
  std::size_t index = 0;
  std::vector<StepRecord> exploration;
  StepRecord evaluation;
  /// Exploration spend plus the N spent on the evaluation step.
  double spend = 0.0;
  /// Truth-scored max_n f_n at the evaluated profile.
  double final_dissatisfaction = 0.0;
  StopReason stop_reason = StopReason::none;
  /// Budget remaining when the episode started.
  double budget_at_start = 0.0;
  /// Sum over players of the joint information of the retained sequence.
  double exploration_information = 0.0;
  ProfileIndex reported = 0;
  ProfileIndex exploring = 0;
  int worst_player = -1;
  std::vector<double> beta;
  std::vector<double> gamma;

  double exploration_spend() const {
    double s = 0.0;
    for (const auto& st : exploration) s += st.cost;
    return s;
  }
};

}  // namespace mfpne
