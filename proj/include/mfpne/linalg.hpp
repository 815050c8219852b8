#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mfpne {

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Raised when a covariance matrix cannot be factorised even after jitter
/// escalation. Carries an estimate of the matrix condition number.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

struct JitterPolicy {
  double initial = 1e-10;
  double max = 1e-6;
  double factor = 10.0;
};

/// Eigenvalue ratio of a symmetric matrix, used for error diagnostics only.
double condition_estimate(const Eigen::MatrixXd& symmetric);

struct Factorization {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

/// Cholesky factor of `cov + jitter*I`, escalating the jitter per `policy`.
/// Throws NumericError when the largest jitter still fails.
Factorization factorize_with_jitter(const Eigen::MatrixXd& cov,
                                    const JitterPolicy& policy = {});

/// Lower-triangular Cholesky factor grown one row at a time.
///
/// Appending a point with cross-covariance vector k (against the points
/// already factorised) and self-covariance s produces the row
/// l = L^{-1} k and pivot sqrt(s - |l|^2), which is exactly the next row of a
/// full Cholesky-Banachiewicz factorisation of the extended matrix.
class GrowingCholesky {
 public:
  struct Row {
    Eigen::VectorXd below;  // L^{-1} k
    double pivot = 0.0;     // new diagonal entry
  };

  GrowingCholesky() = default;

  std::size_t size() const noexcept { return n_; }

  /// Computes the row for a new point without modifying the factor.
  /// Returns pivot <= 0 when the extended matrix is not positive definite.
  Row propose(std::span<const double> cross, double self) const;

  void commit(const Row& row);

  /// Replaces the whole factor (used after a jittered refactorisation).
  void reset(const Eigen::MatrixXd& lower);

  void clear() { n_ = 0; }

  double at(std::size_t i, std::size_t j) const { return storage_(i, j); }

  /// In-place forward substitution: b <- L^{-1} b. b.size() == size().
  void solve_lower(Eigen::Ref<Eigen::VectorXd> b) const;

  /// 2 * sum(log diag L) = log det(L L^T).
  double log_det() const;

  Eigen::MatrixXd dense() const {
    return storage_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>();
  }

 private:
  void reserve(std::size_t capacity);

  Eigen::MatrixXd storage_;
  std::size_t n_ = 0;
};

}  // namespace mfpne
