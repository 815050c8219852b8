#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mfpne/game.hpp"
#include "mfpne/kernel.hpp"
#include "mfpne/mogp.hpp"
#include "mfpne/profile_space.hpp"

namespace support {

using mfpne::KernelParams;

/// Cascade covariance by recursion on u^m = rho_m u^{m+1} + sqrt(1 - rho_m^2) q^m.
inline double cascade_cov(const KernelParams& p, double d2, int m, int m2) {
  const int M = p.fidelities();
  if (m > m2) std::swap(m, m2);
  if (m == M) return std::exp(-p.h * d2);
  const double rho = p.rho[static_cast<std::size_t>(m - 1)];
  if (m < m2) return rho * cascade_cov(p, d2, m + 1, m2);
  return rho * rho * cascade_cov(p, d2, m + 1, m + 1) +
         (1.0 - rho * rho) * std::exp(-p.zeta[static_cast<std::size_t>(m - 1)] * d2);
}

inline double cov(const KernelParams& p, const Eigen::VectorXd& a, int ma, const Eigen::VectorXd& b, int mb) {
  return cascade_cov(p, (a - b).squaredNorm(), ma, mb);
}

struct Point {
  Eigen::VectorXd x;
  int m = 1;
};

inline Eigen::MatrixXd gram(const KernelParams& p, const std::vector<Point>& a, const std::vector<Point>& b) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov(p, a[i].x, a[i].m, b[j].x, b[j].m);
  return g;
}

/// Joint Gaussian conditioning with an LU solve: posterior mean and covariance
/// of the latent values at `query` given noisy observations at `data`.
struct DensePosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline DensePosterior condition(const KernelParams& p, double noise, const std::vector<Point>& data,
                                const Eigen::VectorXd& y, const std::vector<Point>& query) {
  DensePosterior out;
  const Eigen::MatrixXd kqq = gram(p, query, query);
  if (data.empty()) {
    out.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(query.size()));
    out.cov = kqq;
    return out;
  }
  Eigen::MatrixXd kdd = gram(p, data, data);
  kdd.diagonal().array() += noise;
  const Eigen::MatrixXd kdq = gram(p, data, query);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kdd);
  out.mean = kdq.transpose() * lu.solve(y);
  out.cov = kqq - kdq.transpose() * lu.solve(kdq);
  return out;
}

inline double log_det_spd(const Eigen::MatrixXd& a) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::log(std::abs(lu.matrixLU()(i, i)));
  return s;
}

/// I(y_seq; u_seq at the top fidelity | data) from determinants of the posterior joint covariance.
inline double dense_sequence_information(const KernelParams& p, double noise, const std::vector<Point>& data,
                                         const std::vector<Point>& seq) {
  const int M = p.fidelities();
  std::vector<Point> joint;
  for (const auto& s : seq) joint.push_back({s.x, M});
  for (const auto& s : seq) joint.push_back(s);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.size()));
  DensePosterior post = condition(p, noise, data, y, joint);
  const auto t = static_cast<Eigen::Index>(seq.size());
  post.cov.bottomRightCorner(t, t).diagonal().array() += noise;
  const Eigen::MatrixXd uu = post.cov.topLeftCorner(t, t);
  const Eigen::MatrixXd yy = post.cov.bottomRightCorner(t, t);
  return 0.5 * (log_det_spd(uu) + log_det_spd(yy) - log_det_spd(post.cov));
}

inline KernelParams random_params(int M, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> h(0.3, 2.0), rho(0.3, 0.95);
  KernelParams p;
  p.h = h(rng);
  for (int m = 1; m < M; ++m) {
    p.zeta.push_back(h(rng));
    p.rho.push_back(rho(rng));
  }
  return p;
}

inline Eigen::VectorXd random_point(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = u(rng);
  return x;
}

/// Grids of scalar actions with the given sizes.
inline mfpne::ProfileSpace scalar_space(const std::vector<std::size_t>& sizes) {
  std::vector<mfpne::ActionGrid> grids;
  for (auto s : sizes) grids.push_back(mfpne::ActionGrid::uniform(-1.0, 1.0, s));
  return mfpne::ProfileSpace(std::move(grids));
}

/// Random tabular game: tables[n][m-1][x] iid uniform, one fidelity unless M given.
inline std::shared_ptr<mfpne::TabularOracle> random_tabular(const mfpne::ProfileSpace& space, int M,
                                                           std::mt19937_64& rng, double noise_sd = 0.1) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<std::vector<double>>> t(static_cast<std::size_t>(space.players()));
  for (auto& player : t) {
    player.resize(static_cast<std::size_t>(M));
    for (auto& level : player) {
      level.resize(space.profiles());
      for (auto& v : level) v = u(rng);
    }
  }
  return std::make_shared<mfpne::TabularOracle>(std::move(t), noise_sd);
}

/// eps* by nested loops over action tuples, independent of ProfileSpace::column.
inline double brute_force_eps_star(const mfpne::TabularOracle& oracle, const mfpne::ProfileSpace& space) {
  const int N = space.players();
  const int M = static_cast<int>(oracle.tables()[0].size());
  double best = INFINITY;
  std::vector<std::size_t> a(static_cast<std::size_t>(N), 0);
  auto index = [&](const std::vector<std::size_t>& t) {
    mfpne::ProfileIndex x = 0;
    for (int n = 0; n < N; ++n) x = x * space.actions(n) + t[static_cast<std::size_t>(n)];
    return x;
  };
  for (;;) {
    double worst = 0.0;
    for (int n = 0; n < N; ++n) {
      const double own = oracle.value(n, M, index(a));
      double top = -INFINITY;
      auto b = a;
      for (std::size_t k = 0; k < space.actions(n); ++k) {
        b[static_cast<std::size_t>(n)] = k;
        top = std::max(top, oracle.value(n, M, index(b)));
      }
      worst = std::max(worst, top - own);
    }
    best = std::min(best, worst);
    int n = N - 1;
    while (n >= 0 && ++a[static_cast<std::size_t>(n)] == space.actions(n)) a[static_cast<std::size_t>(n--)] = 0;
    if (n < 0) break;
  }
  return best;
}

}  // namespace support
