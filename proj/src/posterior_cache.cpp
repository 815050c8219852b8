#include "mfpne/posterior_cache.hpp"

#include <algorithm>
#include <stdexcept>

#include <omp.h>

namespace mfpne {

void PosteriorCache::grow(std::size_t rows) {
  if (rows <= capacity_) return;
  std::size_t next = std::max<std::size_t>({rows, 2 * capacity_, 32});
  std::vector<double> w(ms_.size() * next, 0.0);
  for (std::size_t s = 0; s < ms_.size(); ++s)
    std::copy_n(w_.data() + s * capacity_, rows_, w.data() + s * next);
  w_ = std::move(w);
  capacity_ = next;
}

void PosteriorCache::fill_slot(std::size_t slot, const MogpModel& model) {
  const Eigen::VectorXd v = model.whiten(xs_[slot], ms_[slot]);
  std::copy_n(v.data(), v.size(), w_.data() + slot * capacity_);
  const double prior = model.prior_covariance(xs_[slot], ms_[slot], xs_[slot], ms_[slot]);
  mean_[slot] = model.size() ? v.dot(model.whitened_targets()) : 0.0;
  var_[slot] = prior - v.squaredNorm();
}

std::size_t PosteriorCache::add(Eigen::VectorXd x, int m, const MogpModel& model) {
  if (bound_ && (model.size() != rows_ || model.generation() != generation_))
    throw std::logic_error("PosteriorCache::add: cache not synced with model");
  if (!bound_) {
    bound_ = true;
    rows_ = model.size();
    generation_ = model.generation();
    grow(rows_);
  }
  const std::size_t slot = ms_.size();
  xs_.push_back(std::move(x));
  ms_.push_back(m);
  mean_.push_back(0.0);
  var_.push_back(0.0);
  w_.resize(ms_.size() * capacity_, 0.0);
  fill_slot(slot, model);
  return slot;
}

void PosteriorCache::rebuild(const MogpModel& model, Execution exec) {
  rows_ = 0;
  grow(model.size());
  rows_ = model.size();
  generation_ = model.generation();
  const auto n = static_cast<std::int64_t>(ms_.size());
#pragma omp parallel for schedule(dynamic, 64) if (exec == Execution::parallel)
  for (std::int64_t s = 0; s < n; ++s) fill_slot(static_cast<std::size_t>(s), model);
}

void PosteriorCache::sync(const MogpModel& model, Execution exec) {
  if (!bound_) {
    bound_ = true;
    rows_ = model.size();
    generation_ = model.generation();
    grow(rows_);
    return;
  }
  if (model.generation() != generation_ || model.size() < rows_) {
    rebuild(model, exec);
    return;
  }
  const std::size_t from = rows_;
  const std::size_t to = model.size();
  if (from == to) return;
  grow(to);

  // Contiguous copy of the new factor rows: lrows[(j-from)*to + i] = L(j, i).
  const auto& factor = model.factor();
  std::vector<double> lrows((to - from) * to, 0.0);
  std::vector<double> pivots(to - from), targets(to - from);
  for (std::size_t j = from; j < to; ++j) {
    for (std::size_t i = 0; i < j; ++i) lrows[(j - from) * to + i] = factor.at(j, i);
    pivots[j - from] = factor.at(j, j);
    targets[j - from] = model.whitened_targets()[static_cast<Eigen::Index>(j)];
  }
  const auto& data = model.data();
  const auto& kernel = model.kernel();
  const auto n = static_cast<std::int64_t>(ms_.size());

#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (std::int64_t s = 0; s < n; ++s) {
    double* w = w_.data() + static_cast<std::size_t>(s) * capacity_;
    const auto& x = xs_[static_cast<std::size_t>(s)];
    const int m = ms_[static_cast<std::size_t>(s)];
    double dmean = 0.0, dvar = 0.0;
    for (std::size_t j = from; j < to; ++j) {
      const double* l = lrows.data() + (j - from) * to;
      double acc = kernel(as_span(x), m, as_span(data[j].x), data[j].m);
      for (std::size_t i = 0; i < j; ++i) acc -= w[i] * l[i];
      const double wj = acc / pivots[j - from];
      w[j] = wj;
      dmean += wj * targets[j - from];
      dvar += wj * wj;
    }
    mean_[static_cast<std::size_t>(s)] += dmean;
    var_[static_cast<std::size_t>(s)] -= dvar;
  }
  rows_ = to;
}

double PosteriorCache::covariance(std::size_t a, std::size_t b, const FidelityKernel& kernel) const {
  const double* wa = w_.data() + a * capacity_;
  const double* wb = w_.data() + b * capacity_;
  double dot = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) dot += wa[i] * wb[i];
  return kernel(as_span(xs_[a]), ms_[a], as_span(xs_[b]), ms_[b]) - dot;
}

namespace kernels {

std::vector<Posterior> posterior_batch_serial(const MogpModel& model, std::span<const QueryPoint> queries) {
  std::vector<Posterior> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(model.posterior(q.x, q.m));
  return out;
}

std::vector<Posterior> posterior_batch(const MogpModel& model, std::span<const QueryPoint> queries) {
  const auto nq = static_cast<Eigen::Index>(queries.size());
  const auto t = static_cast<Eigen::Index>(model.size());
  std::vector<Posterior> out(queries.size());
  if (nq == 0) return out;
  const auto& data = model.data();
  const auto& kernel = model.kernel();

  Eigen::MatrixXd cross(t, nq);
#pragma omp parallel for schedule(static)
  for (Eigen::Index q = 0; q < nq; ++q)
    for (Eigen::Index i = 0; i < t; ++i)
      cross(i, q) = kernel(as_span(queries[q].x), queries[q].m, as_span(data[i].x), data[i].m);

  if (t > 0) {
    const Eigen::MatrixXd lower = model.factor().dense();
    // Column blocks so each thread runs an independent multi-RHS solve.
    const Eigen::Index block = 256;
    const Eigen::Index nblocks = (nq + block - 1) / block;
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index b = 0; b < nblocks; ++b) {
      const Eigen::Index c0 = b * block;
      const Eigen::Index nc = std::min(block, nq - c0);
      lower.triangularView<Eigen::Lower>().solveInPlace(cross.middleCols(c0, nc));
    }
  }
  const Eigen::VectorXd& z = model.whitened_targets();
#pragma omp parallel for schedule(static)
  for (Eigen::Index q = 0; q < nq; ++q) {
    const double prior = kernel(as_span(queries[q].x), queries[q].m, as_span(queries[q].x), queries[q].m);
    Posterior p;
    p.mean = t > 0 ? cross.col(q).dot(z) : 0.0;
    p.variance = std::max(0.0, prior - (t > 0 ? cross.col(q).squaredNorm() : 0.0));
    out[static_cast<std::size_t>(q)] = p;
  }
  return out;
}

}  // namespace kernels

}  // namespace mfpne
