#include "mfpne/mogp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mfpne {

MogpModel::MogpModel(KernelParams params, double noise_variance, JitterPolicy jitter)
    : kernel_(std::move(params)),
      noise_variance_(noise_variance),
      policy_(jitter),
      jitter_(jitter.initial) {
  if (!(noise_variance > 0.0)) throw std::invalid_argument("mogp: noise variance must be positive");
}

MogpModel::MogpModel(KernelParams params, double noise_variance,
                     std::span<const ObservationRecord> records, JitterPolicy jitter)
    : MogpModel(std::move(params), noise_variance, jitter) {
  for (const auto& r : records) check(r.x, r.m);
  data_.assign(records.begin(), records.end());
  refactorize();
  generation_ = 0;
}

void MogpModel::check(const Eigen::VectorXd& x, int m) const {
  if (m < 1 || m > fidelities())
    throw std::invalid_argument("mogp: fidelity " + std::to_string(m) + " outside 1.." +
                                std::to_string(fidelities()));
  if (!data_.empty() && data_.front().x.size() != x.size())
    throw std::invalid_argument("mogp: input dimension mismatch");
}

Eigen::VectorXd MogpModel::cross_covariance(const Eigen::VectorXd& x, int m) const {
  Eigen::VectorXd k(static_cast<Eigen::Index>(data_.size()));
  for (std::size_t i = 0; i < data_.size(); ++i)
    k[static_cast<Eigen::Index>(i)] = kernel_(as_span(x), m, as_span(data_[i].x), data_[i].m);
  return k;
}

Eigen::VectorXd MogpModel::whiten(const Eigen::VectorXd& x, int m) const {
  check(x, m);
  Eigen::VectorXd v = cross_covariance(x, m);
  factor_.solve_lower(v);
  return v;
}

Posterior MogpModel::posterior(const Eigen::VectorXd& x, int m) const {
  const Eigen::VectorXd v = whiten(x, m);
  const double prior = kernel_(as_span(x), m, as_span(x), m);
  Posterior p;
  p.mean = data_.empty() ? 0.0 : v.dot(whitened_y_);
  p.variance = std::max(0.0, prior - v.squaredNorm());
  return p;
}

double MogpModel::posterior_covariance(const Eigen::VectorXd& a, int ma, const Eigen::VectorXd& b,
                                       int mb) const {
  return kernel_(as_span(a), ma, as_span(b), mb) - whiten(a, ma).dot(whiten(b, mb));
}

Eigen::MatrixXd MogpModel::regularized_gram() const {
  const auto n = static_cast<Eigen::Index>(data_.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      g(i, j) = g(j, i) = kernel_(as_span(data_[i].x), data_[i].m, as_span(data_[j].x), data_[j].m);
  g.diagonal().array() += noise_variance_ + jitter_;
  return g;
}

void MogpModel::refactorize() {
  Eigen::MatrixXd gram = regularized_gram();
  gram.diagonal().array() -= jitter_;
  JitterPolicy escalated = policy_;
  escalated.initial = jitter_;
  const Factorization f = factorize_with_jitter(gram, escalated);
  jitter_ = f.jitter;
  factor_.reset(f.lower);
  whitened_y_.resize(static_cast<Eigen::Index>(data_.size()));
  for (std::size_t i = 0; i < data_.size(); ++i) whitened_y_[static_cast<Eigen::Index>(i)] = data_[i].y;
  factor_.solve_lower(whitened_y_);
  ++generation_;
}

void MogpModel::append(ObservationRecord rec) {
  check(rec.x, rec.m);
  const Eigen::VectorXd cross = cross_covariance(rec.x, rec.m);
  const double self = kernel_(as_span(rec.x), rec.m, as_span(rec.x), rec.m) + noise_variance_ + jitter_;
  auto row = factor_.propose(as_span(cross), self);
  data_.push_back(std::move(rec));
  if (row.pivot > 0.0) {
    const double z = (data_.back().y - row.below.dot(whitened_y_)) / row.pivot;
    factor_.commit(row);
    whitened_y_.conservativeResize(whitened_y_.size() + 1);
    whitened_y_[whitened_y_.size() - 1] = z;
    return;
  }
  jitter_ *= policy_.factor;
  refactorize();
}

MogpModel append_observation(MogpModel model, ObservationRecord rec) {
  model.append(std::move(rec));
  return model;
}

double mutual_information_from_variance(double variance, double noise_variance) {
  return 0.5 * std::log1p(std::max(0.0, variance) / noise_variance);
}

double mutual_information_single(const MogpModel& model, const Eigen::VectorXd& x, int m) {
  return mutual_information_from_variance(model.posterior(x, m).variance, model.noise_variance());
}

double mutual_information_sequence(const MogpModel& model0, std::span<const QueryPoint> seq) {
  if (seq.empty()) throw std::invalid_argument("mutual_information_sequence: empty sequence");
  const int M = model0.fidelities();
  const auto tau = static_cast<Eigen::Index>(seq.size());
  const auto t0 = static_cast<Eigen::Index>(model0.size());
  Eigen::MatrixXd wu(t0, tau), wv(t0, tau);
  for (Eigen::Index i = 0; i < tau; ++i) {
    wu.col(i) = model0.whiten(seq[i].x, M);
    wv.col(i) = model0.whiten(seq[i].x, seq[i].m);
  }
  const auto& k = model0.kernel();
  Eigen::MatrixXd kuu(tau, tau), kvv(tau, tau), cvu(tau, tau);
  for (Eigen::Index i = 0; i < tau; ++i) {
    for (Eigen::Index j = 0; j < tau; ++j) {
      const double d2 = squared_distance(as_span(seq[i].x), as_span(seq[j].x));
      kuu(i, j) = k(d2, M, M);
      kvv(i, j) = k(d2, seq[i].m, seq[j].m);
      cvu(i, j) = k(d2, seq[i].m, M);
    }
  }
  kuu.noalias() -= wu.transpose() * wu;
  kvv.noalias() -= wv.transpose() * wv;
  cvu.noalias() -= wv.transpose() * wu;

  Eigen::MatrixXd kyy = kvv;
  kyy.diagonal().array() += model0.noise_variance();

  const Factorization fu = factorize_with_jitter(kuu);
  Eigen::MatrixXd b = fu.lower.triangularView<Eigen::Lower>().solve(cvu.transpose());
  Eigen::MatrixXd schur = kyy;
  schur.noalias() -= b.transpose() * b;

  const Factorization fy = factorize_with_jitter(kyy, {0.0, 0.0, 10.0});
  const Factorization fs = factorize_with_jitter(schur, {0.0, 0.0, 10.0});
  const double ld_y = 2.0 * fy.lower.diagonal().array().log().sum();
  const double ld_s = 2.0 * fs.lower.diagonal().array().log().sum();
  return 0.5 * (ld_y - ld_s);
}

SequenceInformation::SequenceInformation(MogpModel model0) : model0_(std::move(model0)) {}

double SequenceInformation::information() const {
  if (points_.empty()) return 0.0;
  if (dense_mode_) return dense_information(nullptr);
  return 0.5 * (yy_.log_det() + uu_.log_det() - joint_.log_det());
}

double SequenceInformation::dense_information(const QueryPoint* extra) const {
  std::vector<QueryPoint> seq = points_;
  if (extra) seq.push_back(*extra);
  return mutual_information_sequence(model0_, seq);
}

SequenceInformation::Extension SequenceInformation::propose(const QueryPoint& q) const {
  const int M = model0_.fidelities();
  const auto& k = model0_.kernel();
  const double eps = JitterPolicy{}.initial;
  const double s2 = model0_.noise_variance();

  Extension ext;
  ext.point = q;
  ext.whitened_top = model0_.whiten(q.x, M);
  ext.whitened_obs = model0_.whiten(q.x, q.m);
  if (dense_mode_) {
    ext.ok = false;
    return ext;
  }
  const auto& nu = ext.whitened_top;
  const auto& nv = ext.whitened_obs;

  const std::size_t tau = points_.size();
  std::vector<double> c_uu(tau), c_vv(tau), c_joint_u(2 * tau), c_joint_y(2 * tau + 1);
  for (std::size_t i = 0; i < tau; ++i) {
    const double d2 = squared_distance(as_span(points_[i].x), as_span(q.x));
    const int mi = points_[i].m;
    const double uu = k(d2, M, M) - wu_[i].dot(nu);
    const double vu = k(d2, mi, M) - wv_[i].dot(nu);
    const double uv = k(d2, M, q.m) - wu_[i].dot(nv);
    const double vv = k(d2, mi, q.m) - wv_[i].dot(nv);
    c_uu[i] = uu;
    c_vv[i] = vv;
    c_joint_u[2 * i] = uu;
    c_joint_u[2 * i + 1] = vu;
    c_joint_y[2 * i] = uv;
    c_joint_y[2 * i + 1] = vv;
  }
  const double self_uu = k(0.0, M, M) - nu.squaredNorm();
  const double self_vv = k(0.0, q.m, q.m) - nv.squaredNorm();
  const double self_uv = k(0.0, M, q.m) - nu.dot(nv);
  c_joint_y[2 * tau] = self_uv;

  ext.uu = uu_.propose(c_uu, self_uu + eps);
  ext.yy = yy_.propose(c_vv, self_vv + s2);
  ext.joint_u = joint_.propose(c_joint_u, self_uu + eps);

  // Row of y_new against the joint factor already extended by u_new.
  const std::size_t n = 2 * tau;
  Eigen::VectorXd head = Eigen::Map<const Eigen::VectorXd>(c_joint_y.data(), static_cast<Eigen::Index>(n));
  joint_.solve_lower(head);
  ext.joint_y.below.resize(static_cast<Eigen::Index>(n + 1));
  ext.joint_y.below.head(static_cast<Eigen::Index>(n)) = head;
  double last = 0.0;
  if (ext.joint_u.pivot > 0.0) last = (self_uv - ext.joint_u.below.dot(head)) / ext.joint_u.pivot;
  ext.joint_y.below[static_cast<Eigen::Index>(n)] = last;
  const double residual = self_vv + s2 - head.squaredNorm() - last * last;
  ext.joint_y.pivot = residual > 0.0 ? std::sqrt(residual) : 0.0;

  ext.ok = ext.uu.pivot > 0.0 && ext.yy.pivot > 0.0 && ext.joint_u.pivot > 0.0 &&
           ext.joint_y.pivot > 0.0;
  return ext;
}

double SequenceInformation::information_with(const Extension& ext) const {
  if (!ext.ok) return dense_information(&ext.point);
  const double ld_y = yy_.log_det() + 2.0 * std::log(ext.yy.pivot);
  const double ld_u = uu_.log_det() + 2.0 * std::log(ext.uu.pivot);
  const double ld_j = joint_.log_det() + 2.0 * std::log(ext.joint_u.pivot) +
                      2.0 * std::log(ext.joint_y.pivot);
  return 0.5 * (ld_y + ld_u - ld_j);
}

void SequenceInformation::commit(Extension ext) {
  if (!ext.ok) {
    dense_mode_ = true;
  } else {
    uu_.commit(ext.uu);
    yy_.commit(ext.yy);
    joint_.commit(ext.joint_u);
    joint_.commit(ext.joint_y);
  }
  wu_.push_back(std::move(ext.whitened_top));
  wv_.push_back(std::move(ext.whitened_obs));
  points_.push_back(std::move(ext.point));
}

}  // namespace mfpne
