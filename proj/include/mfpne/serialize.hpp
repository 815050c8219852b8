#pragma once

#include "json.hpp"

#include "mfpne/game.hpp"
#include "mfpne/kernel.hpp"
#include "mfpne/policies.hpp"
#include "mfpne/testbeds.hpp"

namespace mfpne {

nlohmann::json to_json(const KernelParams& p);
KernelParams kernel_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GameSpec& spec);
nlohmann::json profile_json(ProfileIndex x, const ProfileSpace& space);
nlohmann::json to_json(const DecisionPair& d, const ProfileSpace& space);
nlohmann::json to_json(const EpisodeLog& e, const ProfileSpace& space);

/// Full run record. `include_wallclock = false` gives a byte-stable form.
nlohmann::json to_json(const RunResult& r, bool include_wallclock = true);

/// Testbed, seed, specification and truth summary of an instance.
nlohmann::json instance_json(const GameInstance& inst);

}  // namespace mfpne
