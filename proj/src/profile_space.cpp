#include "mfpne/profile_space.hpp"

#include <limits>
#include <stdexcept>

namespace mfpne {

ActionGrid ActionGrid::uniform(double lo, double hi, std::size_t points) {
  if (points == 0) throw std::invalid_argument("ActionGrid::uniform: empty grid");
  ActionGrid g;
  for (std::size_t i = 0; i < points; ++i) {
    const double v = points == 1 ? 0.5 * (lo + hi)
                                 : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    g.raw.push_back(Eigen::VectorXd::Constant(1, v));
    g.features.push_back(Eigen::VectorXd::Constant(1, v));
  }
  return g;
}

ProfileSpace::ProfileSpace(std::vector<ActionGrid> grids) : grids_(std::move(grids)) {
  if (grids_.empty()) throw std::invalid_argument("ProfileSpace: no players");
  const std::size_t n = grids_.size();
  strides_.assign(n, 1);
  offsets_.assign(n, 0);
  ProfileIndex total = 1;
  for (std::size_t i = n; i-- > 0;) {
    const auto& g = grids_[i];
    if (g.size() == 0 || g.features.size() != g.size())
      throw std::invalid_argument("ProfileSpace: player grid empty or features missing");
    const auto dim = g.features.front().size();
    for (const auto& f : g.features)
      if (f.size() != dim) throw std::invalid_argument("ProfileSpace: ragged feature dimension");
    strides_[i] = total;
    if (total > std::numeric_limits<ProfileIndex>::max() / g.size())
      throw std::overflow_error("ProfileSpace: profile count overflows 64 bits");
    total *= g.size();
  }
  total_ = total;
  std::size_t off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    offsets_[i] = off;
    off += static_cast<std::size_t>(grids_[i].features.front().size());
  }
  feature_dim_ = off;
}

ProfileIndex ProfileSpace::with_action(ProfileIndex x, int n, std::size_t a) const {
  const auto cur = action(x, n);
  const auto s = strides_[static_cast<std::size_t>(n)];
  return x - cur * s + a * s;
}

std::vector<std::size_t> ProfileSpace::decode(ProfileIndex x) const {
  std::vector<std::size_t> out(grids_.size());
  for (int n = 0; n < players(); ++n) out[static_cast<std::size_t>(n)] = action(x, n);
  return out;
}

ProfileIndex ProfileSpace::encode(std::span<const std::size_t> actions) const {
  if (actions.size() != grids_.size()) throw std::invalid_argument("ProfileSpace::encode: wrong arity");
  ProfileIndex x = 0;
  for (std::size_t n = 0; n < grids_.size(); ++n) {
    if (actions[n] >= grids_[n].size()) throw std::out_of_range("ProfileSpace::encode: action index");
    x += actions[n] * strides_[n];
  }
  return x;
}

Eigen::VectorXd ProfileSpace::features(ProfileIndex x) const {
  Eigen::VectorXd f(static_cast<Eigen::Index>(feature_dim_));
  for (std::size_t n = 0; n < grids_.size(); ++n) {
    const auto& v = grids_[n].features[action(x, static_cast<int>(n))];
    f.segment(static_cast<Eigen::Index>(offsets_[n]), v.size()) = v;
  }
  return f;
}

std::vector<ProfileIndex> ProfileSpace::column(ProfileIndex x, int n) const {
  const auto k = actions(n);
  const ProfileIndex base = with_action(x, n, 0);
  const ProfileIndex s = stride(n);
  std::vector<ProfileIndex> out(k);
  for (std::size_t a = 0; a < k; ++a) out[a] = base + a * s;
  return out;
}

}  // namespace mfpne
