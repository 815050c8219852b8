#include "mfpne/acquisition.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mfpne {

void BudgetLedger::start_episode() {
  spent_episode = 0.0;
  remaining_episode_start = remaining();
}

void BudgetLedger::charge(double cost) {
  if (spent_total + cost > Lambda + kBudgetTolerance * std::max(1.0, Lambda))
    throw IntegrityError("budget ledger: charging " + std::to_string(cost) + " exceeds budget " +
                         std::to_string(Lambda) + " (spent " + std::to_string(spent_total) + ")");
  spent_total += cost;
  spent_episode += cost;
}

bool check_stop_insufficient(const GameSpec& spec, double remaining) {
  return remaining + kBudgetTolerance < spec.players() * (spec.min_cost() + 1.0);
}

bool check_stop_insufficient(const GameSpec& spec, const BudgetLedger& ledger) {
  return check_stop_insufficient(spec, ledger.remaining());
}

bool check_stop_fidelity_fraction(const DecisionPair& candidate, int fidelities, double eta) {
  const double frac = static_cast<double>(candidate.top_count(fidelities)) /
                      static_cast<double>(candidate.fidelities.size());
  return frac >= eta;
}

bool mi_ratio_below(double information, double cost, double budget_at_start) {
  return information / cost < 1.0 / std::sqrt(budget_at_start);
}

bool check_stop_mi_ratio(const std::vector<MogpModel>& models0, const GameSpec& spec,
                         const std::vector<DecisionPair>& sequence, const BudgetLedger& ledger) {
  if (sequence.empty()) throw std::invalid_argument("check_stop_mi_ratio: empty sequence");
  double info = 0.0, cost = 0.0;
  for (int n = 0; n < spec.players(); ++n) {
    std::vector<QueryPoint> seq;
    for (const auto& d : sequence)
      seq.push_back({spec.space.features(d.profile), d.fidelities[static_cast<std::size_t>(n)]});
    info += mutual_information_sequence(models0[static_cast<std::size_t>(n)], seq);
  }
  for (const auto& d : sequence) cost += d.cost(spec.costs);
  return mi_ratio_below(info, cost, ledger.remaining_episode_start);
}

std::optional<FidelityChoice> best_fidelities(std::span<const double> info, int players,
                                              const std::vector<double>& costs, double cap) {
  const int M = static_cast<int>(costs.size());
  const auto N = static_cast<std::size_t>(players);
  auto at = [&](std::size_t n, int m) { return info[n * static_cast<std::size_t>(M) + static_cast<std::size_t>(m - 1)]; };

  FidelityChoice c;
  c.fidelities.assign(N, 1);
  auto totals = [&] {
    c.information = 0.0;
    c.cost = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      c.information += at(n, c.fidelities[n]);
      c.cost += costs[static_cast<std::size_t>(c.fidelities[n] - 1)];
    }
  };
  totals();
  if (c.cost > cap + kBudgetTolerance) return std::nullopt;

  // Dinkelbach: r_{k+1} = ratio of the maximiser of sum(info - r_k cost).
  for (int iter = 0; iter < 64; ++iter) {
    const double r = c.ratio();
    std::vector<int> next(N);
    for (std::size_t n = 0; n < N; ++n) {
      int arg = 1;
      double best = -std::numeric_limits<double>::infinity();
      for (int m = 1; m <= M; ++m) {
        const double v = at(n, m) - r * costs[static_cast<std::size_t>(m - 1)];
        if (v > best) {
          best = v;
          arg = m;
        }
      }
      next[n] = arg;
    }
    double ni = 0.0, nc = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      ni += at(n, next[n]);
      nc += costs[static_cast<std::size_t>(next[n] - 1)];
    }
    if (!(ni / nc > r) || next == c.fidelities) break;
    c.fidelities = std::move(next);
    totals();
  }

  while (c.cost > cap + kBudgetTolerance) {
    std::size_t bn = 0;
    int bm = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < N; ++n) {
      const int cur = c.fidelities[n];
      for (int m = 1; m < cur; ++m) {
        const double saved = costs[static_cast<std::size_t>(cur - 1)] - costs[static_cast<std::size_t>(m - 1)];
        if (saved <= 0.0) continue;
        const double loss = (at(n, cur) - at(n, m)) / saved;
        if (loss < best) {
          best = loss;
          bn = n;
          bm = m;
        }
      }
    }
    if (bm == 0) return std::nullopt;
    c.fidelities[bn] = bm;
    totals();
  }
  return c;
}

std::optional<DecisionPair> select_exploration_pair(const SurrogateSet& surrogates, const BudgetLedger& ledger) {
  const auto& spec = surrogates.spec();
  const int N = spec.players();
  const int M = spec.fidelities();
  const double cap = ledger.remaining() - N;
  const double s2 = spec.sigma2;

  std::optional<DecisionPair> best;
  double best_ratio = -std::numeric_limits<double>::infinity();
  std::vector<double> info(static_cast<std::size_t>(N * M));
  for (ProfileIndex x : surrogates.candidates()) {
    for (int n = 0; n < N; ++n) {
      const auto& cache = surrogates.cache(n);
      for (int m = 1; m <= M; ++m) {
        const auto s = static_cast<std::size_t>(surrogates.slot(x, m));
        info[static_cast<std::size_t>(n * M + m - 1)] = mutual_information_from_variance(cache.variance(s), s2);
      }
    }
    auto choice = best_fidelities(info, N, spec.costs, cap);
    if (!choice) return std::nullopt;
    const double r = choice->ratio();
    if (r > best_ratio) {
      best_ratio = r;
      best = DecisionPair{x, std::move(choice->fidelities)};
    }
  }
  return best;
}

ExplorationOutcome run_exploration_phase(SurrogateSet& surrogates, BudgetLedger& ledger,
                                         const UtilityOracle& oracle, std::vector<Rng>& player_rngs) {
  const auto& spec = surrogates.spec();
  const int N = spec.players();
  const int M = spec.fidelities();
  const double start = ledger.remaining_episode_start;

  std::vector<SequenceInformation> seqs;
  seqs.reserve(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) seqs.emplace_back(surrogates.model(n));

  ExplorationOutcome out;
  out.information.assign(static_cast<std::size_t>(N), 0.0);
  for (;;) {
    if (check_stop_insufficient(spec, ledger)) {
      out.stop_reason = StopReason::insufficient_budget;
      break;
    }
    auto cand = select_exploration_pair(surrogates, ledger);
    if (!cand) {
      out.stop_reason = StopReason::insufficient_budget;
      break;
    }
    if (check_stop_fidelity_fraction(*cand, M, spec.eta)) {
      out.stop_reason = StopReason::fidelity_fraction;
      break;
    }
    const Eigen::VectorXd& f = surrogates.features(cand->profile);
    std::vector<SequenceInformation::Extension> ext;
    ext.reserve(static_cast<std::size_t>(N));
    double info = 0.0;
    std::vector<double> per_player(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
      ext.push_back(seqs[static_cast<std::size_t>(n)].propose({f, cand->fidelities[static_cast<std::size_t>(n)]}));
      per_player[static_cast<std::size_t>(n)] = seqs[static_cast<std::size_t>(n)].information_with(ext.back());
      info += per_player[static_cast<std::size_t>(n)];
    }
    const double cost = cand->cost(spec.costs);
    if (mi_ratio_below(info, out.cost + cost, start)) {
      out.stop_reason = StopReason::mi_ratio;
      break;
    }

    StepRecord step;
    step.decision = *cand;
    step.cost = cost;
    step.observations.resize(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n)
      step.observations[static_cast<std::size_t>(n)] =
          oracle.observe(n, cand->profile, cand->fidelities[static_cast<std::size_t>(n)], player_rngs[static_cast<std::size_t>(n)]);
    ledger.charge(cost);
    surrogates.record(step.decision, step.observations);
    for (int n = 0; n < N; ++n) seqs[static_cast<std::size_t>(n)].commit(std::move(ext[static_cast<std::size_t>(n)]));
    out.information = per_player;
    out.cost += cost;
    out.steps.push_back(std::move(step));
  }

  if (!out.steps.empty()) {
    for (const auto& s : out.steps)
      if (s.decision.all_top(M)) throw IntegrityError("exploration step queried every player at the top fidelity");
    if (mi_ratio_below(out.total_information(), out.cost, start))
      throw IntegrityError("retained exploration sequence violates the information-ratio bound");
    if (ledger.remaining() + kBudgetTolerance < N)
      throw IntegrityError("exploration left less than N budget for evaluation");
  }
  return out;
}

}  // namespace mfpne
