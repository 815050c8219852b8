#include "mfpne/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace mfpne {

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::none: return "none";
    case StopReason::insufficient_budget: return "insufficient_budget";
    case StopReason::fidelity_fraction: return "fidelity_fraction";
    case StopReason::mi_ratio: return "mi_ratio";
  }
  return "none";
}

StopReason stop_reason_from_string(std::string_view s) {
  for (auto r : {StopReason::none, StopReason::insufficient_budget, StopReason::fidelity_fraction,
                 StopReason::mi_ratio})
    if (to_string(r) == s) return r;
  throw std::invalid_argument("unknown stop reason: " + std::string(s));
}

void GameSpec::validate() const {
  const int N = players();
  if (N < 1) throw std::invalid_argument("GameSpec: no players");
  if (costs.empty()) throw std::invalid_argument("GameSpec: empty cost ladder");
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!(costs[i] > 0.0)) throw std::invalid_argument("GameSpec: costs must be positive");
    if (i > 0 && costs[i] < costs[i - 1]) throw std::invalid_argument("GameSpec: costs must be nondecreasing");
  }
  if (costs.back() != 1.0) throw std::invalid_argument("GameSpec: top-fidelity cost must be exactly 1");
  kernel.validate();
  if (kernel.fidelities() != fidelities())
    throw std::invalid_argument("GameSpec: kernel fidelity count differs from cost ladder");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("GameSpec: sigma2 must be positive");
  if (!(C > 0.0)) throw std::invalid_argument("GameSpec: C must be positive");
  if (!(B >= 0.0)) throw std::invalid_argument("GameSpec: B must be nonnegative");
  if (!(delta > 0.0 && delta < 1.0 / N))
    throw std::invalid_argument("GameSpec: delta must lie in (0, 1/N)");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("GameSpec: eta must lie in (0, 1]");
  if (!(Lambda >= 0.0)) throw std::invalid_argument("GameSpec: negative budget");
}

void GameSpec::validate_budget() const {
  const double need = players() * (min_cost() + 1.0);
  if (Lambda + kBudgetTolerance < need)
    throw std::invalid_argument("GameSpec: budget " + std::to_string(Lambda) + " below N(lambda_1 + 1) = " +
                                std::to_string(need));
}

TabularOracle::TabularOracle(std::vector<std::vector<std::vector<double>>> tables, double noise_sd)
    : tables_(std::move(tables)), noise_sd_(noise_sd) {
  if (tables_.empty()) throw std::invalid_argument("TabularOracle: no players");
  const auto M = tables_.front().size();
  for (const auto& t : tables_)
    if (t.size() != M || M == 0) throw std::invalid_argument("TabularOracle: ragged fidelity tables");
}

double TabularOracle::observe(int n, ProfileIndex x, int m, Rng& rng) const {
  std::normal_distribution<double> z(0.0, 1.0);
  return value(n, m, x) + noise_sd_ * z(rng);
}

double TabularOracle::true_utility(int n, ProfileIndex x) const {
  return tables_[static_cast<std::size_t>(n)].back()[x];
}

double dissatisfaction(const UtilityOracle& oracle, const ProfileSpace& space, int n, ProfileIndex x) {
  double best = -std::numeric_limits<double>::infinity();
  for (ProfileIndex y : space.column(x, n)) best = std::max(best, oracle.true_utility(n, y));
  return std::max(0.0, best - oracle.true_utility(n, x));
}

DissatisfactionTable DissatisfactionTable::exhaustive(std::shared_ptr<const UtilityOracle> oracle,
                                                      const ProfileSpace& space, Execution exec) {
  DissatisfactionTable t;
  t.oracle_ = std::move(oracle);
  t.space_ = space;
  const int N = space.players();
  const auto P = static_cast<std::int64_t>(space.profiles());
  t.f_.assign(static_cast<std::size_t>(N), std::vector<double>(static_cast<std::size_t>(P)));
  std::vector<std::vector<double>> u(static_cast<std::size_t>(N), std::vector<double>(static_cast<std::size_t>(P)));
  const UtilityOracle& o = *t.oracle_;

#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (std::int64_t x = 0; x < P; ++x)
    for (int n = 0; n < N; ++n) u[static_cast<std::size_t>(n)][static_cast<std::size_t>(x)] = o.true_utility(n, static_cast<ProfileIndex>(x));

  for (int n = 0; n < N; ++n) {
    const auto& un = u[static_cast<std::size_t>(n)];
    auto& fn = t.f_[static_cast<std::size_t>(n)];
    const ProfileIndex s = space.stride(n);
    const std::size_t K = space.actions(n);
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
    for (std::int64_t xi = 0; xi < P; ++xi) {
      const auto x = static_cast<ProfileIndex>(xi);
      const ProfileIndex base = x - space.action(x, n) * s;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < K; ++a) best = std::max(best, un[base + a * s]);
      fn[x] = std::max(0.0, best - un[x]);
    }
  }

  t.eps_star_ = std::numeric_limits<double>::infinity();
  t.max_f_all_ = 0.0;
  for (ProfileIndex x = 0; x < static_cast<ProfileIndex>(P); ++x) {
    double worst = 0.0;
    for (int n = 0; n < N; ++n) worst = std::max(worst, t.f_[static_cast<std::size_t>(n)][x]);
    if (worst < t.eps_star_) {
      t.eps_star_ = worst;
      t.argmin_ = x;
    }
    t.max_f_all_ = std::max(t.max_f_all_, worst);
  }
  return t;
}

DissatisfactionTable DissatisfactionTable::on_demand(std::shared_ptr<const UtilityOracle> oracle,
                                                     const ProfileSpace& space, double eps_star,
                                                     ProfileIndex argmin, double max_dissatisfaction) {
  DissatisfactionTable t;
  t.oracle_ = std::move(oracle);
  t.space_ = space;
  t.eps_star_ = eps_star;
  t.argmin_ = argmin;
  t.max_f_all_ = max_dissatisfaction;
  return t;
}

double DissatisfactionTable::f(int n, ProfileIndex x) const {
  if (dense()) return f_[static_cast<std::size_t>(n)][x];
  return dissatisfaction(*oracle_, space_, n, x);
}

double DissatisfactionTable::max_f(ProfileIndex x) const {
  double worst = 0.0;
  for (int n = 0; n < players(); ++n) worst = std::max(worst, f(n, x));
  return worst;
}

void DissatisfactionTable::write_csv(std::ostream& os) const {
  if (!dense()) throw std::logic_error("DissatisfactionTable::write_csv: table is not materialised");
  const int N = players();
  os << "profile";
  for (int n = 0; n < N; ++n) os << ",a_" << n;
  for (int n = 0; n < N; ++n) os << ",f_" << n;
  os << ",max_f,eps_star\n";
  os.precision(17);
  for (ProfileIndex x = 0; x < space_.profiles(); ++x) {
    os << x;
    for (int n = 0; n < N; ++n) os << ',' << space_.action(x, n);
    for (int n = 0; n < N; ++n) os << ',' << f_[static_cast<std::size_t>(n)][x];
    os << ',' << max_f(x) << ',' << eps_star_ << '\n';
  }
}

EpsilonStar epsilon_star(const UtilityOracle& oracle, const GameSpec& spec) {
  // Non-owning alias: the table does not outlive this call.
  std::shared_ptr<const UtilityOracle> view(std::shared_ptr<const UtilityOracle>{}, &oracle);
  const auto table = DissatisfactionTable::exhaustive(view, spec.space);
  return {table.eps_star(), table.argmin_profile()};
}

double default_dissatisfaction_bound(const DissatisfactionTable& table) {
  const double m = table.max_dissatisfaction();
  return m > 0.0 ? 1.05 * m : 1.0;
}

double reward(const GameSpec& spec, const DissatisfactionTable& table, ProfileIndex x,
              const std::vector<int>& fidelities) {
  const int M = spec.fidelities();
  for (int m : fidelities)
    if (m != M) return 0.0;
  return (spec.C - table.max_f(x)) / spec.C;
}

RegretBreakdown cumulative_regret(const GameSpec& spec, const DissatisfactionTable& table,
                                  const std::vector<EpisodeLog>& episodes) {
  const double N = spec.players();
  RegretBreakdown out;
  double spent = 0.0;
  const double opt = 1.0 - table.eps_star() / spec.C;
  for (const auto& e : episodes) {
    const double expected = e.exploration_spend() + N;
    if (std::abs(e.spend - expected) > kBudgetTolerance * std::max(1.0, expected))
      throw IntegrityError("episode " + std::to_string(e.index) + " spend " + std::to_string(e.spend) +
                           " differs from exploration spend + N = " + std::to_string(expected));
    spent += e.spend;
    const double r = (e.spend / N) * opt - (1.0 - e.final_dissatisfaction / spec.C);
    out.per_episode.push_back(r);
    out.total += r;
  }
  if (spent > spec.Lambda + kBudgetTolerance * std::max(1.0, spec.Lambda))
    throw IntegrityError("total spend " + std::to_string(spent) + " exceeds budget " + std::to_string(spec.Lambda));
  return out;
}

double simple_pne_regret(const DissatisfactionTable& table, const std::vector<ProfileIndex>& visited) {
  if (visited.empty()) throw std::invalid_argument("simple_pne_regret: no visited profiles");
  double best = std::numeric_limits<double>::infinity();
  for (ProfileIndex x : visited) best = std::min(best, table.max_f(x));
  return std::max(0.0, best - table.eps_star());
}

}  // namespace mfpne
