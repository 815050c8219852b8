#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mfpne {

using ProfileIndex = std::uint64_t;

/// Finite action set of one player.
///
/// `raw` holds actions in their native units (dB, probabilities, ...);
/// `features` holds the coordinates the surrogate sees. Both have one entry
/// per action and all features share a dimension.
struct ActionGrid {
  std::vector<Eigen::VectorXd> raw;
  std::vector<Eigen::VectorXd> features;

  std::size_t size() const { return raw.size(); }

  /// Scalar actions used both as raw values and features.
  static ActionGrid uniform(double lo, double hi, std::size_t points);
};

/// Joint action profiles as mixed-radix integers. Player 0 is the most
/// significant digit, so index order is lexicographic order of action tuples.
class ProfileSpace {
 public:
  ProfileSpace() = default;
  explicit ProfileSpace(std::vector<ActionGrid> grids);

  int players() const { return static_cast<int>(grids_.size()); }
  std::size_t actions(int n) const { return grids_[static_cast<std::size_t>(n)].size(); }
  const ActionGrid& grid(int n) const { return grids_[static_cast<std::size_t>(n)]; }

  /// Total number of joint profiles.
  ProfileIndex profiles() const { return total_; }
  ProfileIndex stride(int n) const { return strides_[static_cast<std::size_t>(n)]; }

  std::size_t action(ProfileIndex x, int n) const {
    return static_cast<std::size_t>((x / strides_[static_cast<std::size_t>(n)]) %
                                    grids_[static_cast<std::size_t>(n)].size());
  }
  ProfileIndex with_action(ProfileIndex x, int n, std::size_t a) const;

  std::vector<std::size_t> decode(ProfileIndex x) const;
  ProfileIndex encode(std::span<const std::size_t> actions) const;

  /// Concatenated per-player features: the surrogate input for profile x.
  Eigen::VectorXd features(ProfileIndex x) const;
  std::size_t feature_dim() const { return feature_dim_; }

  /// Profiles sharing x_{-n}: x with player n's action swept over its grid.
  std::vector<ProfileIndex> column(ProfileIndex x, int n) const;

 private:
  std::vector<ActionGrid> grids_;
  std::vector<ProfileIndex> strides_;
  std::vector<std::size_t> offsets_;
  ProfileIndex total_ = 0;
  std::size_t feature_dim_ = 0;
};

}  // namespace mfpne
