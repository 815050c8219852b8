#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mfpne/mogp.hpp"

namespace mfpne {

enum class Execution { serial, parallel };

/// Posterior mean and variance of one player's model over a registered set of
/// query points, kept current by rank-one updates as observations arrive.
///
/// For every slot the cache stores w = L^{-1} k(slot), the whitened
/// cross-covariance against the model data. When the model gains observation
/// j, each slot receives
///   w_j = (k(slot, x_j) - <w_{<j}, L_{j,<j}>) / L_jj,
///   mean += w_j z_j,  var -= w_j^2,
/// which costs O(slots * t) per observation instead of O(slots * t^2) for a
/// fresh solve. A rebuilt (re-jittered) factor triggers a full recompute.
class PosteriorCache {
 public:
  PosteriorCache() = default;

  std::size_t size() const { return ms_.size(); }

  /// Registers (x, m) and returns its slot. The model must already be synced.
  std::size_t add(Eigen::VectorXd x, int m, const MogpModel& model);

  /// Brings every slot up to date with `model`.
  void sync(const MogpModel& model, Execution exec = Execution::parallel);

  std::size_t synced_rows() const { return rows_; }

  double mean(std::size_t slot) const { return mean_[slot]; }
  double variance(std::size_t slot) const { return var_[slot] > 0.0 ? var_[slot] : 0.0; }
  const Eigen::VectorXd& input(std::size_t slot) const { return xs_[slot]; }
  int fidelity(std::size_t slot) const { return ms_[slot]; }

  std::span<const double> whitened(std::size_t slot) const {
    return {w_.data() + slot * capacity_, rows_};
  }

  /// Posterior covariance between two slots.
  double covariance(std::size_t a, std::size_t b, const FidelityKernel& kernel) const;

 private:
  void grow(std::size_t rows);
  void rebuild(const MogpModel& model, Execution exec);
  void fill_slot(std::size_t slot, const MogpModel& model);

  std::size_t rows_ = 0;
  std::size_t capacity_ = 0;
  std::uint64_t generation_ = 0;
  bool bound_ = false;
  std::vector<double> w_;
  std::vector<double> mean_, var_;
  std::vector<Eigen::VectorXd> xs_;
  std::vector<int> ms_;
};

namespace kernels {

/// Reference: one triangular solve per query point.
std::vector<Posterior> posterior_batch_serial(const MogpModel& model, std::span<const QueryPoint> queries);

/// Same result with the cross-covariance block and solve distributed over threads.
std::vector<Posterior> posterior_batch(const MogpModel& model, std::span<const QueryPoint> queries);

}  // namespace kernels

}  // namespace mfpne
