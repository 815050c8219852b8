#pragma once

#include <unordered_map>
#include <vector>

#include "mfpne/decision.hpp"
#include "mfpne/game.hpp"
#include "mfpne/mogp.hpp"
#include "mfpne/posterior_cache.hpp"

namespace mfpne {

/// Every player's surrogate together with posterior caches over the tracked
/// profiles.
///
/// Candidate profiles (those the policies may select) are tracked at every
/// fidelity. Their unilateral-deviation columns are tracked at the top
/// fidelity, which is what the confidence bounds need. With the full grid as
/// candidate set every profile is a candidate.
class SurrogateSet {
 public:
  SurrogateSet(const GameSpec& spec, std::vector<ProfileIndex> candidates,
               Execution exec = Execution::parallel);

  /// All grid profiles as candidates.
  static SurrogateSet full_grid(const GameSpec& spec, Execution exec = Execution::parallel);

  const GameSpec& spec() const { return *spec_; }
  int players() const { return spec_->players(); }
  int fidelities() const { return spec_->fidelities(); }
  Execution execution() const { return exec_; }

  const MogpModel& model(int n) const { return models_[static_cast<std::size_t>(n)]; }
  const std::vector<MogpModel>& models() const { return models_; }
  const PosteriorCache& cache(int n) const { return caches_[static_cast<std::size_t>(n)]; }

  /// Candidate profiles in ascending index order.
  const std::vector<ProfileIndex>& candidates() const { return candidates_; }
  bool is_candidate(ProfileIndex x) const;
  /// Tracks x at every fidelity and its columns at the top fidelity.
  void add_candidate(ProfileIndex x);

  /// Cache slot of (x, m), or -1 when untracked.
  std::ptrdiff_t slot(ProfileIndex x, int m) const;
  std::ptrdiff_t top_slot(ProfileIndex x) const { return slot(x, fidelities()); }

  const Eigen::VectorXd& features(ProfileIndex x) const;

  /// Posterior of player n at (x, m): cached when tracked, solved otherwise.
  Posterior posterior(int n, ProfileIndex x, int m) const;

  /// Appends one observation per player for `decision` and refreshes caches.
  void record(const DecisionPair& decision, const std::vector<double>& observations);

  std::size_t tracked_points() const { return points_.size(); }

 private:
  std::size_t ensure_point(ProfileIndex x);
  void ensure_slot(std::size_t point, int m);

  const GameSpec* spec_;
  Execution exec_;
  std::vector<MogpModel> models_;
  std::vector<PosteriorCache> caches_;
  std::vector<ProfileIndex> candidates_;
  std::vector<ProfileIndex> points_;
  std::vector<Eigen::VectorXd> point_features_;
  std::vector<std::vector<std::ptrdiff_t>> point_slots_;  // [point][m-1]
  std::unordered_map<ProfileIndex, std::size_t> point_of_;
};

}  // namespace mfpne
