#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mfpne/kernel.hpp"
#include "mfpne/linalg.hpp"

namespace mfpne {

/// A (input, fidelity) location at which a player's utility can be queried.
struct QueryPoint {
  Eigen::VectorXd x;
  int m = 1;
};

struct ObservationRecord {
  Eigen::VectorXd x;
  int m = 1;
  double y = 0.0;
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact multi-fidelity GP posterior for a single player.
///
/// Keeps the lower Cholesky factor of K + sigma^2 I (+ jitter) and the
/// whitened targets z = L^{-1} y, both extended row by row on append.
class MogpModel {
 public:
  MogpModel(KernelParams params, double noise_variance, JitterPolicy jitter = {});

  /// Batch construction: one full factorisation over `records`.
  MogpModel(KernelParams params, double noise_variance, std::span<const ObservationRecord> records,
            JitterPolicy jitter = {});

  const FidelityKernel& kernel() const { return kernel_; }
  const KernelParams& params() const { return kernel_.params(); }
  double noise_variance() const { return noise_variance_; }
  int fidelities() const { return kernel_.fidelities(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<ObservationRecord>& data() const { return data_; }

  /// Jitter currently added to the regularised Gram diagonal.
  double jitter() const { return jitter_; }
  /// Incremented whenever the factor is rebuilt rather than extended.
  std::uint64_t generation() const { return generation_; }

  const GrowingCholesky& factor() const { return factor_; }
  /// z = L^{-1} y.
  const Eigen::VectorXd& whitened_targets() const { return whitened_y_; }

  void append(ObservationRecord rec);

  double prior_covariance(const Eigen::VectorXd& a, int ma, const Eigen::VectorXd& b, int mb) const {
    return kernel_(as_span(a), ma, as_span(b), mb);
  }

  /// Cross-covariances k((x,m), data_i) for every stored observation.
  Eigen::VectorXd cross_covariance(const Eigen::VectorXd& x, int m) const;

  /// L^{-1} k(x, m): posterior quantities are inner products of these.
  Eigen::VectorXd whiten(const Eigen::VectorXd& x, int m) const;

  Posterior posterior(const Eigen::VectorXd& x, int m) const;

  double posterior_covariance(const Eigen::VectorXd& a, int ma, const Eigen::VectorXd& b,
                              int mb) const;

  /// Regularised Gram matrix K + (sigma^2 + jitter) I over the stored data.
  Eigen::MatrixXd regularized_gram() const;

 private:
  void check(const Eigen::VectorXd& x, int m) const;
  void refactorize();

  FidelityKernel kernel_;
  double noise_variance_;
  JitterPolicy policy_;
  double jitter_;
  std::uint64_t generation_ = 0;
  std::vector<ObservationRecord> data_;
  GrowingCholesky factor_;
  Eigen::VectorXd whitened_y_;
};

MogpModel append_observation(MogpModel model, ObservationRecord rec);

/// 1/2 ln(1 + var/sigma^2) for the posterior variance at (x, m).
double mutual_information_single(const MogpModel& model, const Eigen::VectorXd& x, int m);
double mutual_information_from_variance(double variance, double noise_variance);

/// Joint mutual information between noisy observations at the queried
/// fidelities and the top-fidelity latent values at the queried inputs,
/// conditioned on `model0`'s data.
double mutual_information_sequence(const MogpModel& model0, std::span<const QueryPoint> seq);

/// Incremental form of mutual_information_sequence for a growing sequence.
///
/// Maintains Cholesky factors of K_uu + eps I, K_obs + sigma^2 I and of the
/// joint covariance of (u, y) in interleaved order, so that
///   I = 1/2 [log det K_yy + log det K_uu - log det J].
/// Extending by one point costs O(t0^2 + tau t0 + tau^2).
class SequenceInformation {
 public:
  explicit SequenceInformation(MogpModel model0);

  struct Extension {
    QueryPoint point;
    Eigen::VectorXd whitened_top;
    Eigen::VectorXd whitened_obs;
    GrowingCholesky::Row uu, yy, joint_u, joint_y;
    bool ok = true;
  };

  std::size_t length() const { return points_.size(); }
  const std::vector<QueryPoint>& points() const { return points_; }
  const MogpModel& base_model() const { return model0_; }

  /// Information of the current sequence.
  double information() const;

  Extension propose(const QueryPoint& q) const;
  /// Information of the sequence extended by `ext` (does not modify state).
  double information_with(const Extension& ext) const;
  void commit(Extension ext);

 private:
  double dense_information(const QueryPoint* extra) const;

  MogpModel model0_;
  std::vector<QueryPoint> points_;
  std::vector<Eigen::VectorXd> wu_, wv_;
  GrowingCholesky uu_, yy_, joint_;
  bool dense_mode_ = false;
};

}  // namespace mfpne
