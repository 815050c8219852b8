#include "mfpne/surrogate.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mfpne {

SurrogateSet::SurrogateSet(const GameSpec& spec, std::vector<ProfileIndex> candidates, Execution exec)
    : spec_(&spec), exec_(exec) {
  const int N = spec.players();
  models_.reserve(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) models_.emplace_back(spec.kernel, spec.sigma2);
  caches_.resize(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) caches_[static_cast<std::size_t>(n)].sync(models_[static_cast<std::size_t>(n)], exec_);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  for (ProfileIndex x : candidates) add_candidate(x);
}

SurrogateSet SurrogateSet::full_grid(const GameSpec& spec, Execution exec) {
  std::vector<ProfileIndex> all(static_cast<std::size_t>(spec.space.profiles()));
  std::iota(all.begin(), all.end(), ProfileIndex{0});
  return SurrogateSet(spec, std::move(all), exec);
}

bool SurrogateSet::is_candidate(ProfileIndex x) const {
  return std::binary_search(candidates_.begin(), candidates_.end(), x);
}

std::size_t SurrogateSet::ensure_point(ProfileIndex x) {
  if (x >= spec_->space.profiles()) throw std::out_of_range("SurrogateSet: profile index out of range");
  auto it = point_of_.find(x);
  if (it != point_of_.end()) return it->second;
  const std::size_t id = points_.size();
  points_.push_back(x);
  point_features_.push_back(spec_->space.features(x));
  point_slots_.emplace_back(static_cast<std::size_t>(fidelities()), -1);
  point_of_.emplace(x, id);
  return id;
}

void SurrogateSet::ensure_slot(std::size_t point, int m) {
  auto& s = point_slots_[point][static_cast<std::size_t>(m - 1)];
  if (s >= 0) return;
  std::size_t slot = 0;
  for (int n = 0; n < players(); ++n)
    slot = caches_[static_cast<std::size_t>(n)].add(point_features_[point], m, models_[static_cast<std::size_t>(n)]);
  s = static_cast<std::ptrdiff_t>(slot);
}

void SurrogateSet::add_candidate(ProfileIndex x) {
  if (is_candidate(x)) return;
  const int M = fidelities();
  const std::size_t p = ensure_point(x);
  for (int m = 1; m <= M; ++m) ensure_slot(p, m);
  for (int n = 0; n < players(); ++n)
    for (ProfileIndex y : spec_->space.column(x, n)) ensure_slot(ensure_point(y), M);
  candidates_.insert(std::upper_bound(candidates_.begin(), candidates_.end(), x), x);
}

std::ptrdiff_t SurrogateSet::slot(ProfileIndex x, int m) const {
  auto it = point_of_.find(x);
  if (it == point_of_.end()) return -1;
  return point_slots_[it->second][static_cast<std::size_t>(m - 1)];
}

const Eigen::VectorXd& SurrogateSet::features(ProfileIndex x) const {
  auto it = point_of_.find(x);
  if (it == point_of_.end()) throw std::out_of_range("SurrogateSet::features: untracked profile");
  return point_features_[it->second];
}

Posterior SurrogateSet::posterior(int n, ProfileIndex x, int m) const {
  const auto s = slot(x, m);
  const auto& c = caches_[static_cast<std::size_t>(n)];
  if (s >= 0) return {c.mean(static_cast<std::size_t>(s)), c.variance(static_cast<std::size_t>(s))};
  return models_[static_cast<std::size_t>(n)].posterior(spec_->space.features(x), m);
}

void SurrogateSet::record(const DecisionPair& decision, const std::vector<double>& observations) {
  const int N = players();
  if (decision.fidelities.size() != static_cast<std::size_t>(N) || observations.size() != static_cast<std::size_t>(N))
    throw std::invalid_argument("SurrogateSet::record: arity mismatch");
  const Eigen::VectorXd f = spec_->space.features(decision.profile);
  for (int n = 0; n < N; ++n) {
    auto& model = models_[static_cast<std::size_t>(n)];
    model.append({f, decision.fidelities[static_cast<std::size_t>(n)], observations[static_cast<std::size_t>(n)]});
    caches_[static_cast<std::size_t>(n)].sync(model, exec_);
  }
}

}  // namespace mfpne
