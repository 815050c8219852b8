#pragma once

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include "mfpne/decision.hpp"
#include "mfpne/kernel.hpp"
#include "mfpne/posterior_cache.hpp"
#include "mfpne/profile_space.hpp"
#include "mfpne/rng.hpp"

namespace mfpne {

/// Raised when a run's spend ledger contradicts its budget.
class IntegrityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Budget tolerance for comparisons of summed floating costs.
inline constexpr double kBudgetTolerance = 1e-9;

struct GameSpec {
  ProfileSpace space;
  /// Normalised query costs per fidelity; nondecreasing with costs.back() == 1.
  std::vector<double> costs{1.0};
  /// Surrogate hyperparameters shared by every player's model.
  KernelParams kernel;
  double sigma2 = 0.1;
  double Lambda = 32.0;
  double C = 1.0;
  double B = 2.0;
  double delta = 0.1;
  double eta = 0.5;

  int players() const { return space.players(); }
  int fidelities() const { return static_cast<int>(costs.size()); }
  double min_cost() const { return costs.front(); }

  /// Structural checks (costs, noise, confidence and threshold ranges).
  void validate() const;
  /// Lambda >= N (lambda_1 + 1): room for one exploration and one evaluation step.
  void validate_budget() const;
};

/// Ground truth and noisy query access for a game instance.
class UtilityOracle {
 public:
  virtual ~UtilityOracle() = default;
  /// Noisy fidelity-m observation of player n's utility at x.
  virtual double observe(int n, ProfileIndex x, int m, Rng& rng) const = 0;
  /// Exact utility, used for scoring only.
  virtual double true_utility(int n, ProfileIndex x) const = 0;
};

/// Oracle backed by dense per-player, per-fidelity utility tables and
/// homoscedastic Gaussian observation noise.
class TabularOracle : public UtilityOracle {
 public:
  /// tables[n][m-1][x]; the last fidelity is the truth.
  TabularOracle(std::vector<std::vector<std::vector<double>>> tables, double noise_sd);

  double observe(int n, ProfileIndex x, int m, Rng& rng) const override;
  double true_utility(int n, ProfileIndex x) const override;
  double value(int n, int m, ProfileIndex x) const {
    return tables_[static_cast<std::size_t>(n)][static_cast<std::size_t>(m - 1)][x];
  }
  const std::vector<std::vector<std::vector<double>>>& tables() const { return tables_; }
  double noise_sd() const { return noise_sd_; }

 private:
  std::vector<std::vector<std::vector<double>>> tables_;
  double noise_sd_;
};

double dissatisfaction(const UtilityOracle& oracle, const ProfileSpace& space, int n, ProfileIndex x);

/// Exact dissatisfaction of every player, either materialised over the whole
/// grid or evaluated on demand from the oracle (for spaces too large to
/// enumerate, with eps* and the maximum supplied by a structured solver).
class DissatisfactionTable {
 public:
  static DissatisfactionTable exhaustive(std::shared_ptr<const UtilityOracle> oracle,
                                         const ProfileSpace& space,
                                         Execution exec = Execution::parallel);
  static DissatisfactionTable on_demand(std::shared_ptr<const UtilityOracle> oracle,
                                        const ProfileSpace& space, double eps_star,
                                        ProfileIndex argmin, double max_dissatisfaction);

  bool dense() const { return !f_.empty(); }
  int players() const { return space_.players(); }
  const ProfileSpace& space() const { return space_; }

  double f(int n, ProfileIndex x) const;
  double max_f(ProfileIndex x) const;
  double eps_star() const { return eps_star_; }
  ProfileIndex argmin_profile() const { return argmin_; }
  /// max over players and profiles of f_n.
  double max_dissatisfaction() const { return max_f_all_; }

  /// Columns: profile, a_0..a_{N-1}, f_0..f_{N-1}, max_f, eps_star. Dense tables only.
  void write_csv(std::ostream& os) const;

 private:
  std::shared_ptr<const UtilityOracle> oracle_;
  ProfileSpace space_;
  std::vector<std::vector<double>> f_;  // [n][x]
  double eps_star_ = 0.0;
  ProfileIndex argmin_ = 0;
  double max_f_all_ = 0.0;
};

struct EpsilonStar {
  double value = 0.0;
  ProfileIndex profile = 0;
};

EpsilonStar epsilon_star(const UtilityOracle& oracle, const GameSpec& spec);

/// 1.05 * max f: the default dissatisfaction bound C.
double default_dissatisfaction_bound(const DissatisfactionTable& table);

double reward(const GameSpec& spec, const DissatisfactionTable& table, ProfileIndex x,
              const std::vector<int>& fidelities);

struct RegretBreakdown {
  double total = 0.0;
  std::vector<double> per_episode;
};

RegretBreakdown cumulative_regret(const GameSpec& spec, const DissatisfactionTable& table,
                                  const std::vector<EpisodeLog>& episodes);

/// Best visited max-dissatisfaction minus eps*.
double simple_pne_regret(const DissatisfactionTable& table, const std::vector<ProfileIndex>& visited);

}  // namespace mfpne
