#include "mfpne/serialize.hpp"

namespace mfpne {

using nlohmann::json;

json to_json(const KernelParams& p) { return json{{"h", p.h}, {"zeta", p.zeta}, {"rho", p.rho}}; }

KernelParams kernel_params_from_json(const json& j) {
  KernelParams p;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "h" && it.key() != "zeta" && it.key() != "rho")
      throw std::invalid_argument("kernel: unknown key '" + it.key() + "'");
  p.h = j.at("h").get<double>();
  p.zeta = j.at("zeta").get<std::vector<double>>();
  p.rho = j.at("rho").get<std::vector<double>>();
  p.validate();
  return p;
}

json to_json(const GameSpec& spec) {
  json actions = json::array();
  for (int n = 0; n < spec.players(); ++n) actions.push_back(spec.space.actions(n));
  return json{{"players", spec.players()}, {"actions", actions},       {"costs", spec.costs},
              {"kernel", to_json(spec.kernel)}, {"sigma2", spec.sigma2}, {"Lambda", spec.Lambda},
              {"C", spec.C},                  {"B", spec.B},            {"delta", spec.delta},
              {"eta", spec.eta}};
}

json profile_json(ProfileIndex x, const ProfileSpace& space) {
  json raw = json::array();
  for (int n = 0; n < space.players(); ++n) {
    const auto& a = space.grid(n).raw[space.action(x, n)];
    raw.push_back(std::vector<double>(a.data(), a.data() + a.size()));
  }
  return json{{"profile", x}, {"actions", space.decode(x)}, {"raw", raw}};
}

json to_json(const DecisionPair& d, const ProfileSpace& space) {
  json j = profile_json(d.profile, space);
  j["fidelities"] = d.fidelities;
  return j;
}

namespace {

json step_json(const StepRecord& s, const ProfileSpace& space) {
  json j = to_json(s.decision, space);
  j["observations"] = s.observations;
  j["cost"] = s.cost;
  return j;
}

}  // namespace

json to_json(const EpisodeLog& e, const ProfileSpace& space) {
  json expl = json::array();
  for (const auto& s : e.exploration) expl.push_back(step_json(s, space));
  return json{{"index", e.index},
              {"budget_at_start", e.budget_at_start},
              {"exploration", expl},
              {"evaluation", step_json(e.evaluation, space)},
              {"spend", e.spend},
              {"final_dissatisfaction", e.final_dissatisfaction},
              {"stop_reason", std::string(to_string(e.stop_reason))},
              {"exploration_information", e.exploration_information},
              {"reported", e.reported},
              {"exploring", e.exploring},
              {"worst_player", e.worst_player},
              {"beta", e.beta},
              {"gamma", e.gamma}};
}

json to_json(const RunResult& r, bool include_wallclock) {
  json eps = json::array();
  for (const auto& e : r.episodes) eps.push_back(to_json(e, r.spec.space));
  json j{{"policy", std::string(to_string(r.policy))},
         {"seed", r.seed},
         {"spec", to_json(r.spec)},
         {"eps_star", r.eps_star},
         {"degenerate", r.degenerate},
         {"spend", r.spend},
         {"simple_regret", r.simple_regret},
         {"cumulative_regret", r.cumulative_regret},
         {"simple_regret_trace", r.simple_regret_trace},
         {"cumulative_regret_trace", r.cumulative_regret_trace},
         {"episodes", eps}};
  if (!r.degenerate) {
    j["last_profile"] = profile_json(r.last_profile, r.spec.space);
    j["best_profile"] = profile_json(r.best_profile, r.spec.space);
  }
  if (include_wallclock) j["wallclock_ms"] = r.wallclock_ms;
  return j;
}

json instance_json(const GameInstance& inst) {
  return json{{"testbed", inst.testbed},
              {"seed", inst.seed},
              {"spec", to_json(inst.spec)},
              {"profiles", inst.spec.space.profiles()},
              {"eps_star", inst.table->eps_star()},
              {"argmin_profile", profile_json(inst.table->argmin_profile(), inst.spec.space)},
              {"max_dissatisfaction", inst.table->max_dissatisfaction()}};
}

}  // namespace mfpne
