#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "mfpne/testbeds.hpp"

namespace mfpne {

double aloha_energy(const AlohaConfig& config, const Eigen::VectorXd& action) {
  return action[0] * (config.c1 + config.c2 * action[1]);
}

ActionGrid aloha_grid(const AlohaConfig& config, double cap) {
  if (config.levels < 2) throw std::invalid_argument("aloha: need at least two probability levels");
  ActionGrid g;
  const double step = 1.0 / static_cast<double>(config.levels - 1);
  for (std::size_t i = 0; i < config.levels; ++i) {
    for (std::size_t j = 0; j < config.levels; ++j) {
      Eigen::VectorXd a(2);
      a << static_cast<double>(i) * step, static_cast<double>(j) * step;
      if (a[0] * a[1] > 1.0 - 1e-9) continue;
      if (aloha_energy(config, a) > cap + 1e-9) continue;
      g.raw.push_back(a);
      g.features.push_back(a);
    }
  }
  return g;
}

AlohaOracle::AlohaOracle(AlohaConfig config, ProfileSpace space, double noise_sd)
    : config_(std::move(config)), space_(std::move(space)), noise_sd_(noise_sd) {
  if (config_.fidelity_tradeoff.size() + 1 != config_.costs.size())
    throw std::invalid_argument("aloha: need one energy weight per low fidelity");
  for (int n = 0; n < space_.players(); ++n) {
    std::vector<double> p, e;
    for (const auto& a : space_.grid(n).raw) {
      p.push_back(a[0] * a[1]);
      e.push_back(aloha_energy(config_, a));
    }
    access_.push_back(std::move(p));
    energy_.push_back(std::move(e));
  }
}

double AlohaOracle::throughput(int n, ProfileIndex x) const {
  double t = access_[static_cast<std::size_t>(n)][space_.action(x, n)];
  for (int k = 0; k < space_.players(); ++k)
    if (k != n) t *= 1.0 - access_[static_cast<std::size_t>(k)][space_.action(x, k)];
  return t;
}

double AlohaOracle::energy(int n, ProfileIndex x) const {
  return energy_[static_cast<std::size_t>(n)][space_.action(x, n)];
}

double AlohaOracle::utility(int n, ProfileIndex x, int m) const {
  const int M = static_cast<int>(config_.costs.size());
  const double w = m == M ? config_.tradeoff : config_.fidelity_tradeoff.at(static_cast<std::size_t>(m - 1));
  return throughput(n, x) - w * energy(n, x);
}

double AlohaOracle::observe(int n, ProfileIndex x, int m, Rng& rng) const {
  std::normal_distribution<double> z(0.0, 1.0);
  return utility(n, x, m) + noise_sd_ * z(rng);
}

double AlohaOracle::true_utility(int n, ProfileIndex x) const {
  return utility(n, x, static_cast<int>(config_.costs.size()));
}

namespace {

struct ReducedAction {
  double p;
  double energy;
  std::size_t action;
};

}  // namespace

AlohaSolution solve_aloha(const AlohaOracle& oracle) {
  const auto& space = oracle.space();
  const auto& cfg = oracle.config();
  const int N = space.players();
  const double xi = cfg.tradeoff;

  // Per player: least-energy action for each distinct access probability, and
  // the full action list for best-response values.
  std::vector<std::vector<ReducedAction>> reduced(static_cast<std::size_t>(N));
  std::vector<std::vector<ReducedAction>> all(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) {
    std::map<double, ReducedAction> best;
    const auto& grid = space.grid(n);
    for (std::size_t a = 0; a < grid.size(); ++a) {
      const double p = grid.raw[a][0] * grid.raw[a][1];
      const double e = aloha_energy(cfg, grid.raw[a]);
      all[static_cast<std::size_t>(n)].push_back({p, e, a});
      auto it = best.find(p);
      if (it == best.end() || e < it->second.energy) best[p] = {p, e, a};
    }
    for (const auto& [p, r] : best) reduced[static_cast<std::size_t>(n)].push_back(r);
  }

  // Best-response value of player n when the others leave idle probability q.
  auto br_value = [&](int n, double q) {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& r : reduced[static_cast<std::size_t>(n)]) v = std::max(v, r.p * q - xi * r.energy);
    return v;
  };

  AlohaSolution sol;
  // max f: f_n = br(Q) + max_a (xi E_a - p_a Q) over every achievable Q_{-n}.
  for (int n = 0; n < N; ++n) {
    std::vector<double> qs{1.0};
    for (int k = 0; k < N; ++k) {
      if (k == n) continue;
      std::vector<double> next;
      for (double q : qs)
        for (const auto& r : reduced[static_cast<std::size_t>(k)]) next.push_back(q * (1.0 - r.p));
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      qs = std::move(next);
    }
    for (double q : qs) {
      double worst = -std::numeric_limits<double>::infinity();
      for (const auto& r : all[static_cast<std::size_t>(n)]) worst = std::max(worst, xi * r.energy - r.p * q);
      sol.max_dissatisfaction = std::max(sol.max_dissatisfaction, br_value(n, q) + worst);
    }
  }

  // eps*: enumerate reduced profiles.
  std::vector<std::size_t> idx(static_cast<std::size_t>(N), 0);
  std::vector<double> idle(static_cast<std::size_t>(N)), prefix(static_cast<std::size_t>(N) + 1),
      suffix(static_cast<std::size_t>(N) + 1);
  std::vector<std::size_t> actions(static_cast<std::size_t>(N));
  sol.eps_star = std::numeric_limits<double>::infinity();
  for (;;) {
    for (int n = 0; n < N; ++n) idle[static_cast<std::size_t>(n)] = 1.0 - reduced[static_cast<std::size_t>(n)][idx[static_cast<std::size_t>(n)]].p;
    prefix[0] = 1.0;
    for (int n = 0; n < N; ++n) prefix[static_cast<std::size_t>(n) + 1] = prefix[static_cast<std::size_t>(n)] * idle[static_cast<std::size_t>(n)];
    suffix[static_cast<std::size_t>(N)] = 1.0;
    for (int n = N; n-- > 0;) suffix[static_cast<std::size_t>(n)] = suffix[static_cast<std::size_t>(n) + 1] * idle[static_cast<std::size_t>(n)];
    double worst = 0.0;
    for (int n = 0; n < N && worst <= sol.eps_star; ++n) {
      const double q = prefix[static_cast<std::size_t>(n)] * suffix[static_cast<std::size_t>(n) + 1];
      const auto& r = reduced[static_cast<std::size_t>(n)][idx[static_cast<std::size_t>(n)]];
      worst = std::max(worst, std::max(0.0, br_value(n, q) - (r.p * q - xi * r.energy)));
    }
    if (worst <= sol.eps_star) {
      for (int n = 0; n < N; ++n) actions[static_cast<std::size_t>(n)] = reduced[static_cast<std::size_t>(n)][idx[static_cast<std::size_t>(n)]].action;
      const ProfileIndex x = space.encode(actions);
      if (worst < sol.eps_star || x < sol.argmin) {
        sol.eps_star = worst;
        sol.argmin = x;
      }
    }
    int k = N - 1;
    while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == reduced[static_cast<std::size_t>(k)].size()) {
      idx[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return sol;
}

FixedPointResult best_response_iteration(const UtilityOracle& oracle, const ProfileSpace& space,
                                         ProfileIndex start, std::size_t max_sweeps) {
  FixedPointResult res;
  ProfileIndex x = start;
  std::unordered_set<ProfileIndex> seen{x};
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    res.sweeps = sweep;
    bool changed = false;
    for (int n = 0; n < space.players(); ++n) {
      const double cur = oracle.true_utility(n, x);
      ProfileIndex best = x;
      double best_u = cur;
      for (ProfileIndex y : space.column(x, n)) {
        const double u = oracle.true_utility(n, y);
        if (u > best_u) {
          best_u = u;
          best = y;
        }
      }
      if (best != x) {
        x = best;
        changed = true;
      }
    }
    res.profile = x;
    if (!changed) {
      res.converged = true;
      return res;
    }
    if (!seen.insert(x).second) return res;
  }
  return res;
}

FixedPointResult aloha_fixed_point_equilibrium(const AlohaOracle& oracle) {
  FixedPointResult res = best_response_iteration(oracle, oracle.space(), 0);
  if (!res.converged) {
    res.profile = solve_aloha(oracle).argmin;
    res.used_fallback = true;
  }
  return res;
}

GameInstance make_aloha_instance(const AlohaConfig& config, double budget, double eta, std::uint64_t seed) {
  if (config.energy_caps.empty()) throw std::invalid_argument("aloha: no terminals");
  if (config.costs.empty()) throw std::invalid_argument("aloha: empty cost ladder");
  std::vector<ActionGrid> grids;
  for (double cap : config.energy_caps) grids.push_back(aloha_grid(config, cap));
  GameInstance inst;
  inst.testbed = "aloha";
  inst.seed = seed;
  inst.spec.space = ProfileSpace(std::move(grids));
  inst.spec.costs.clear();
  for (double c : config.costs) inst.spec.costs.push_back(c / config.costs.back());
  inst.spec.kernel = config.surrogate;
  inst.spec.sigma2 = config.sigma2;
  inst.spec.Lambda = budget / config.costs.back();
  inst.spec.B = config.B;
  inst.spec.delta = config.delta;
  inst.spec.eta = eta;
  auto oracle = std::make_shared<AlohaOracle>(config, inst.spec.space, std::sqrt(config.sigma2));
  const AlohaSolution sol = solve_aloha(*oracle);
  inst.table = std::make_shared<DissatisfactionTable>(
      DissatisfactionTable::on_demand(oracle, inst.spec.space, sol.eps_star, sol.argmin, sol.max_dissatisfaction));
  inst.oracle = std::move(oracle);
  inst.spec.C = sol.max_dissatisfaction > 0.0 ? 1.05 * sol.max_dissatisfaction : 1.0;
  inst.spec.validate();
  return inst;
}

}  // namespace mfpne
