#include "mfpne/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfpne {

double condition_estimate(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double hi = ev.cwiseAbs().maxCoeff();
  const double lo = ev.minCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

Factorization factorize_with_jitter(const Eigen::MatrixXd& cov, const JitterPolicy& policy) {
  const auto n = cov.rows();
  double jitter = policy.initial;
  for (;;) {
    Eigen::MatrixXd a = cov;
    a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      return {llt.matrixL(), jitter};
    }
    if (jitter <= 0.0 || jitter >= policy.max * (1.0 - 1e-9)) break;
    jitter = std::min(jitter * policy.factor, policy.max);
  }
  const double cond = condition_estimate(cov);
  std::ostringstream msg;
  msg << "covariance of size " << n << " is not positive definite after jitter "
      << policy.max << " (condition estimate " << cond << ")";
  throw NumericError(msg.str(), cond);
}

void GrowingCholesky::reserve(std::size_t capacity) {
  if (static_cast<Eigen::Index>(capacity) <= storage_.rows()) return;
  std::size_t grown = std::max<std::size_t>(capacity, 2 * static_cast<std::size_t>(storage_.rows()));
  grown = std::max<std::size_t>(grown, 16);
  Eigen::MatrixXd next = Eigen::MatrixXd::Zero(grown, grown);
  next.topLeftCorner(n_, n_) = storage_.topLeftCorner(n_, n_);
  storage_ = std::move(next);
}

GrowingCholesky::Row GrowingCholesky::propose(std::span<const double> cross, double self) const {
  if (cross.size() != n_) throw std::invalid_argument("GrowingCholesky: cross-covariance size mismatch");
  Row row;
  row.below = Eigen::Map<const Eigen::VectorXd>(cross.data(), static_cast<Eigen::Index>(n_));
  solve_lower(row.below);
  const double residual = self - row.below.squaredNorm();
  row.pivot = residual > 0.0 ? std::sqrt(residual) : 0.0;
  return row;
}

void GrowingCholesky::commit(const Row& row) {
  if (!(row.pivot > 0.0)) throw std::invalid_argument("GrowingCholesky: non-positive pivot");
  reserve(n_ + 1);
  storage_.row(n_).head(n_) = row.below.transpose();
  storage_(n_, n_) = row.pivot;
  ++n_;
}

void GrowingCholesky::reset(const Eigen::MatrixXd& lower) {
  n_ = 0;
  reserve(lower.rows());
  n_ = lower.rows();
  storage_.topLeftCorner(n_, n_) = lower.triangularView<Eigen::Lower>();
}

void GrowingCholesky::solve_lower(Eigen::Ref<Eigen::VectorXd> b) const {
  if (n_ == 0) return;
  storage_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>().solveInPlace(b);
}

double GrowingCholesky::log_det() const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += std::log(storage_(i, i));
  return 2.0 * s;
}

}  // namespace mfpne
