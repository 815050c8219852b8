#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mfpne/game.hpp"
#include "mfpne/kernel.hpp"
#include "mfpne/profile_space.hpp"

namespace mfpne {

/// A playable instance: specification, oracle and its truth-scored table.
struct GameInstance {
  std::string testbed;
  std::uint64_t seed = 0;
  GameSpec spec;
  std::shared_ptr<const UtilityOracle> oracle;
  std::shared_ptr<const DissatisfactionTable> table;
};

// ---------------------------------------------------------------- synthetic

struct SyntheticConfig {
  int players = 2;
  std::size_t grid_points = 32;
  /// Parameters the utilities are drawn with.
  KernelParams generator = KernelParams::uniform(2, 0.89, 0.78, 0.768);
  /// Parameters the policies' surrogates use (equal to `generator` when well specified).
  KernelParams surrogate = KernelParams::uniform(2, 0.89, 0.78, 0.768);
  std::vector<double> costs{1.0, 8.0};
  double sigma2 = 0.1;
  double B = 2.0;
  double delta = 0.1;
};

/// Per-player fidelity-stacked utility tables: tables[n][m-1][x].
struct SyntheticGame {
  std::uint64_t seed = 0;
  std::vector<std::vector<std::vector<double>>> tables;
};

/// One exact joint draw of every fidelity at every grid profile per player.
///
/// The RBF kernel over concatenated player features factorises over
/// players, so each cascade component is drawn as a Kronecker product of
/// per-player square-root factors applied to white noise, then the fidelity
/// levels are assembled with the cascade weights.
SyntheticGame sample_synthetic_game(const KernelParams& generator, const ProfileSpace& space, std::uint64_t seed);

GameInstance make_synthetic_instance(const SyntheticConfig& config, double budget, double eta, std::uint64_t seed);

// -------------------------------------------------------------------- power

struct PowerConfig {
  int links = 3;
  std::size_t grid_points = 8;
  double min_db = -13.0;
  double max_db = 23.0;
  double noise_db = -20.0;
  double interference_db = -20.0;
  double penalty = 0.1;
  /// Channel realisations per query at each fidelity (raw costs).
  std::vector<int> samples{1, 10, 20, 50, 100};
  std::size_t truth_samples = 1000000;
  KernelParams surrogate = KernelParams::uniform(5, 0.89, 0.78, 0.768);
  double B = 2.0;
  double delta = 0.1;
};

/// Mean log(1 + SINR_n) minus penalty * p_n (linear power) over fresh Rayleigh draws.
class PowerOracle : public UtilityOracle {
 public:
  PowerOracle(PowerConfig config, ProfileSpace space, std::uint64_t seed);

  double observe(int n, ProfileIndex x, int m, Rng& rng) const override;
  double true_utility(int n, ProfileIndex x) const override;

  /// Mean of `count` single-realisation samples of player n's utility.
  double sample_mean(int n, ProfileIndex x, int count, Rng& rng) const;
  /// Variance of a single-realisation sample, averaged over profiles and players.
  double single_sample_variance() const { return single_variance_; }
  /// Standard error of the truth estimate for player n at x.
  double truth_standard_error(int n, ProfileIndex x) const;
  /// Sum over links of the expected log(1 + SINR) at x (utilities without the power penalty).
  double sum_spectral_efficiency(ProfileIndex x) const;
  const PowerConfig& config() const { return config_; }

 private:
  PowerConfig config_;
  ProfileSpace space_;
  std::vector<std::vector<double>> power_;  // [n][action] linear
  double noise_;
  double psi_;
  std::vector<std::vector<double>> truth_, truth_se_;  // [n][x]
  double single_variance_ = 0.0;
};

GameInstance make_power_instance(const PowerConfig& config, double budget, double eta, std::uint64_t seed);

// -------------------------------------------------------------------- ALOHA

struct AlohaConfig {
  std::vector<double> energy_caps{60, 55, 50, 45, 40};
  /// Levels per probability axis: {0, 1/(L-1), ..., 1}.
  std::size_t levels = 9;
  double c1 = 50.0;
  double c2 = 70.0;
  double tradeoff = 6.5e-4;
  /// Energy weights of fidelities 1..M-1.
  std::vector<double> fidelity_tradeoff{4.9e-4, 5.5e-4, 6.1e-4};
  /// Raw query costs per fidelity.
  std::vector<double> costs{1, 5, 10, 20};
  KernelParams surrogate = KernelParams::uniform(4, 1.08, 0.41, 0.797);
  double sigma2 = 1e-4;
  double B = 0.1;
  double delta = 0.1;
};

/// Energy-feasible (x_1, x_2) pairs of one terminal; raw and features are the probabilities.
ActionGrid aloha_grid(const AlohaConfig& config, double cap);

double aloha_energy(const AlohaConfig& config, const Eigen::VectorXd& action);

class AlohaOracle : public UtilityOracle {
 public:
  AlohaOracle(AlohaConfig config, ProfileSpace space, double noise_sd);

  double observe(int n, ProfileIndex x, int m, Rng& rng) const override;
  double true_utility(int n, ProfileIndex x) const override;

  double utility(int n, ProfileIndex x, int m) const;
  double throughput(int n, ProfileIndex x) const;
  double energy(int n, ProfileIndex x) const;
  const AlohaConfig& config() const { return config_; }
  const ProfileSpace& space() const { return space_; }

 private:
  AlohaConfig config_;
  ProfileSpace space_;
  double noise_sd_;
  std::vector<std::vector<double>> access_, energy_;  // [n][action]
};

/// eps*, a minimiser and max f for the ALOHA game without enumerating the grid.
///
/// A terminal affects the others only through its access probability
/// p = x_1 x_2, and among actions with equal p the least-energy one has the
/// smallest dissatisfaction, so eps* is found over one action per distinct p.
/// Best-response values depend on the opponents only through
/// Q_{-n} = prod_{n' != n} (1 - p_{n'}).
struct AlohaSolution {
  double eps_star = 0.0;
  ProfileIndex argmin = 0;
  double max_dissatisfaction = 0.0;
};
AlohaSolution solve_aloha(const AlohaOracle& oracle);

GameInstance make_aloha_instance(const AlohaConfig& config, double budget, double eta, std::uint64_t seed);

// -------------------------------------------------------------- fixed point

struct FixedPointResult {
  ProfileIndex profile = 0;
  bool converged = false;
  bool used_fallback = false;
  std::size_t sweeps = 0;
};

/// Round-robin best responses on the grid from `start` until no player
/// improves. A revisited profile at a sweep boundary is a cycle.
FixedPointResult best_response_iteration(const UtilityOracle& oracle, const ProfileSpace& space,
                                         ProfileIndex start, std::size_t max_sweeps = 1000);

/// Best-response iteration from the all-idle profile, falling back to the
/// exact minimiser when the iteration cycles.
FixedPointResult aloha_fixed_point_equilibrium(const AlohaOracle& oracle);

}  // namespace mfpne
