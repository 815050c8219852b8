#pragma once

#include <iosfwd>
#include <vector>

#include "mfpne/game.hpp"
#include "mfpne/mogp.hpp"
#include "mfpne/posterior_cache.hpp"
#include "mfpne/surrogate.hpp"

namespace mfpne {

/// beta = B + 4 sigma sqrt(1 + gamma + ln(1/delta)).
double compute_beta(const GameSpec& spec, double gamma);

/// Greedy information-gain chain over a fixed point set at the top fidelity.
///
/// Each step picks the point of largest posterior variance (largest one-step
/// information), fantasises an observation there and accumulates
/// 1/2 ln(1 + var/sigma^2). Variances do not depend on observed values, so
/// the chain is extended lazily and any prefix can be read back.
class GammaChain {
 public:
  GammaChain(MogpModel start, std::vector<Eigen::VectorXd> points, Execution exec = Execution::parallel);

  /// Accumulated information after `horizon` greedy steps.
  double value(std::size_t horizon);
  std::size_t computed() const { return sums_.size() - 1; }

 private:
  MogpModel model_;
  PosteriorCache cache_;
  Execution exec_;
  std::vector<double> sums_{0.0};
};

/// Greedy estimate over every grid profile, starting from `model`'s data.
double estimate_gamma(const MogpModel& model, const GameSpec& spec, std::size_t horizon);

/// Confidence bounds over the candidate profiles of a SurrogateSet.
///
/// Entries are indexed [n][i] with i the position in `profiles`.
struct ConfidenceState {
  std::vector<ProfileIndex> profiles;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<std::vector<double>> mean, sd;
  std::vector<std::vector<double>> u_lo, u_hi;
  std::vector<std::vector<double>> f_lo, f_hi;
  /// Grid argmax of the upper utility bound over player n's column of profile i.
  std::vector<std::vector<ProfileIndex>> best_response_hi;

  std::size_t size() const { return profiles.size(); }

  /// Columns: profile, a_0.., then per player mean, sd, u_lo, u_hi, f_lo, f_hi.
  void write_csv(std::ostream& os, const ProfileSpace& space) const;
};

ConfidenceState build_confidence_state(const SurrogateSet& surrogates, const std::vector<double>& beta,
                                       const std::vector<double>& gamma,
                                       Execution exec = Execution::parallel);

/// Position in state.profiles of argmin_x max_n f_lo_n(x); lowest index on ties.
std::size_t reported_profile(const ConfidenceState& state);

struct ExploringChoice {
  int worst_player = 0;
  ProfileIndex profile = 0;
};

ExploringChoice exploring_profile(const ConfidenceState& state, std::size_t reported);

/// Whichever of the two candidates has larger max_n top-fidelity posterior variance; ties keep `reported`.
ProfileIndex final_evaluation_profile(const SurrogateSet& surrogates, ProfileIndex reported,
                                      ProfileIndex exploring);

}  // namespace mfpne
