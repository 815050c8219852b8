#include "doctest.h"

#include <cmath>
#include <random>

#include "mfpne/mogp.hpp"
#include "mfpne/posterior_cache.hpp"
#include "support.hpp"

using namespace mfpne;

namespace {

struct Fixture {
  KernelParams params;
  double noise;
  std::vector<support::Point> pts;
  Eigen::VectorXd y;
  MogpModel model;
};

Fixture random_fixture(std::mt19937_64& rng, int M, int n, int dim, double noise = 0.1) {
  Fixture f{support::random_params(M, rng), noise, {}, Eigen::VectorXd(n), MogpModel(KernelParams::uniform(1, 1, 1, 0.5), noise)};
  f.model = MogpModel(f.params, noise);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> fid(1, M);
  for (int i = 0; i < n; ++i) {
    f.pts.push_back({support::random_point(dim, rng), fid(rng)});
    f.y[i] = g(rng);
    f.model.append({f.pts.back().x, f.pts.back().m, f.y[i]});
  }
  return f;
}

}  // namespace

TEST_SUITE("mogp") {
  TEST_CASE("posterior matches dense Gaussian conditioning") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 40; ++rep) {
      const int M = 1 + rep % 4;
      Fixture f = random_fixture(rng, M, 1 + rep % 20, 2);
      std::vector<support::Point> query;
      for (int q = 0; q < 5; ++q) query.push_back({support::random_point(2, rng), 1 + q % M});
      const auto dense = support::condition(f.params, f.noise, f.pts, f.y, query);
      for (std::size_t q = 0; q < query.size(); ++q) {
        const Posterior p = f.model.posterior(query[q].x, query[q].m);
        CHECK(std::abs(p.mean - dense.mean[static_cast<Eigen::Index>(q)]) < 1e-8);
        CHECK(std::abs(p.variance - dense.cov(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q))) < 1e-8);
      }
      const double c = f.model.posterior_covariance(query[0].x, query[0].m, query[1].x, query[1].m);
      CHECK(std::abs(c - dense.cov(0, 1)) < 1e-8);
    }
  }

  TEST_CASE("prior posterior is the kernel") {
    MogpModel m(KernelParams::uniform(2, 0.89, 0.78, 0.768), 0.1);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 0.3);
    const Posterior p = m.posterior(x, 1);
    CHECK(p.mean == 0.0);
    CHECK(p.variance == doctest::Approx(1.0));
  }

  TEST_CASE("incremental appends equal a batch factorisation") {
    std::mt19937_64 rng(2);
    Fixture f = random_fixture(rng, 3, 30, 2);
    std::vector<ObservationRecord> recs;
    for (std::size_t i = 0; i < f.pts.size(); ++i) recs.push_back({f.pts[i].x, f.pts[i].m, f.y[static_cast<Eigen::Index>(i)]});
    const MogpModel batch(f.params, f.noise, recs);
    for (int q = 0; q < 20; ++q) {
      const Eigen::VectorXd x = support::random_point(2, rng);
      const int m = 1 + q % 3;
      CHECK(std::abs(batch.posterior(x, m).mean - f.model.posterior(x, m).mean) < 1e-10);
      CHECK(std::abs(batch.posterior(x, m).variance - f.model.posterior(x, m).variance) < 1e-10);
    }
    CHECK(f.model.generation() == 0);
  }

  TEST_CASE("append_observation leaves the original model untouched") {
    MogpModel m(KernelParams::uniform(2, 0.89, 0.78, 0.768), 0.1);
    const MogpModel m2 = append_observation(m, {Eigen::VectorXd::Zero(2), 2, 1.0});
    CHECK(m.size() == 0);
    CHECK(m2.size() == 1);
  }

  TEST_CASE("out-of-range fidelity is rejected") {
    MogpModel m(KernelParams::uniform(2, 0.89, 0.78, 0.768), 0.1);
    CHECK_THROWS_AS(m.append({Eigen::VectorXd::Zero(2), 3, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(m.posterior(Eigen::VectorXd::Zero(2), 0), std::invalid_argument);
  }

  TEST_CASE("variance never increases with more data") {
    std::mt19937_64 rng(4);
    Fixture f = random_fixture(rng, 2, 0, 2);
    const Eigen::VectorXd x = support::random_point(2, rng);
    double prev = f.model.posterior(x, 2).variance;
    for (int i = 0; i < 30; ++i) {
      f.model.append({support::random_point(2, rng), 1 + i % 2, 0.0});
      const double v = f.model.posterior(x, 2).variance;
      CHECK(v <= prev + 1e-12);
      prev = v;
    }
  }
}

TEST_SUITE("posterior_cache") {
  TEST_CASE("rank-one sync equals fresh solves") {
    std::mt19937_64 rng(5);
    Fixture f = random_fixture(rng, 3, 0, 2);
    PosteriorCache cache;
    std::vector<support::Point> slots;
    for (int i = 0; i < 40; ++i) {
      slots.push_back({support::random_point(2, rng), 1 + i % 3});
      cache.add(slots.back().x, slots.back().m, f.model);
    }
    std::normal_distribution<double> g;
    for (int i = 0; i < 25; ++i) {
      f.model.append({support::random_point(2, rng), 1 + i % 3, g(rng)});
      cache.sync(f.model, Execution::serial);
      if (i == 10) {
        slots.push_back({support::random_point(2, rng), 2});
        cache.add(slots.back().x, slots.back().m, f.model);
      }
    }
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const Posterior p = f.model.posterior(slots[s].x, slots[s].m);
      CHECK(std::abs(cache.mean(s) - p.mean) < 1e-10);
      CHECK(std::abs(cache.variance(s) - p.variance) < 1e-10);
    }
    CHECK(std::abs(cache.covariance(0, 1, f.model.kernel()) -
                   f.model.posterior_covariance(slots[0].x, slots[0].m, slots[1].x, slots[1].m)) < 1e-10);
  }

  TEST_CASE("serial and parallel sync agree exactly") {
    std::mt19937_64 rng(6);
    Fixture f = random_fixture(rng, 2, 5, 2);
    PosteriorCache a, b;
    for (int i = 0; i < 500; ++i) {
      const Eigen::VectorXd x = support::random_point(2, rng);
      a.add(x, 1 + i % 2, f.model);
      b.add(x, 1 + i % 2, f.model);
    }
    for (int i = 0; i < 20; ++i) {
      f.model.append({support::random_point(2, rng), 1 + i % 2, 0.1 * i});
      a.sync(f.model, Execution::serial);
      b.sync(f.model, Execution::parallel);
    }
    for (std::size_t s = 0; s < a.size(); ++s) {
      CHECK(a.mean(s) == b.mean(s));
      CHECK(a.variance(s) == b.variance(s));
    }
  }

  TEST_CASE("adding to an unsynced cache is an error") {
    std::mt19937_64 rng(7);
    Fixture f = random_fixture(rng, 2, 2, 2);
    PosteriorCache c;
    c.add(Eigen::VectorXd::Zero(2), 1, f.model);
    f.model.append({Eigen::VectorXd::Ones(2), 1, 0.0});
    CHECK_THROWS_AS(c.add(Eigen::VectorXd::Zero(2), 2, f.model), std::logic_error);
  }

  TEST_CASE("batch kernel matches per-point solves") {
    std::mt19937_64 rng(8);
    Fixture f = random_fixture(rng, 3, 40, 3);
    std::vector<QueryPoint> q;
    for (int i = 0; i < 600; ++i) q.push_back({support::random_point(3, rng), 1 + i % 3});
    const auto a = kernels::posterior_batch_serial(f.model, q);
    const auto b = kernels::posterior_batch(f.model, q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      CHECK(std::abs(a[i].mean - b[i].mean) < 1e-10);
      CHECK(std::abs(a[i].variance - b[i].variance) < 1e-10);
    }
  }
}

TEST_SUITE("information") {
  TEST_CASE("single-point information") {
    MogpModel m(KernelParams::uniform(2, 0.89, 0.78, 0.768), 0.1);
    CHECK(mutual_information_single(m, Eigen::VectorXd::Zero(2), 2) == doctest::Approx(0.5 * std::log(11.0)));
    CHECK(mutual_information_from_variance(-1.0, 0.1) == 0.0);
  }

  TEST_CASE("sequence information matches dense determinants") {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 30; ++rep) {
      const int M = 1 + rep % 4;
      Fixture f = random_fixture(rng, M, rep % 8, 2);
      std::vector<QueryPoint> seq;
      std::vector<support::Point> seq_pts;
      for (int i = 0; i < 1 + rep % 5; ++i) {
        seq_pts.push_back({support::random_point(2, rng), 1 + (i + rep) % M});
        seq.push_back({seq_pts.back().x, seq_pts.back().m});
      }
      const double ref = support::dense_sequence_information(f.params, f.noise, f.pts, seq_pts);
      CHECK(std::abs(mutual_information_sequence(f.model, seq) - ref) < 1e-8);

      SequenceInformation inc(f.model);
      for (const auto& q : seq) {
        auto ext = inc.propose(q);
        const double with = inc.information_with(ext);
        inc.commit(std::move(ext));
        CHECK(std::abs(inc.information() - with) < 1e-12);
      }
      CHECK(std::abs(inc.information() - ref) < 1e-8);
    }
  }

  TEST_CASE("information grows along a sequence") {
    std::mt19937_64 rng(10);
    Fixture f = random_fixture(rng, 2, 3, 2);
    SequenceInformation inc(f.model);
    double prev = 0.0;
    for (int i = 0; i < 8; ++i) {
      inc.commit(inc.propose({support::random_point(2, rng), 1 + i % 2}));
      CHECK(inc.information() >= prev - 1e-12);
      prev = inc.information();
    }
  }

  TEST_CASE("repeated point keeps the information finite") {
    MogpModel m(KernelParams::uniform(2, 0.89, 0.78, 0.768), 0.1);
    SequenceInformation inc(m);
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
    for (int i = 0; i < 4; ++i) inc.commit(inc.propose({x, 2}));
    std::vector<QueryPoint> seq(4, QueryPoint{x, 2});
    CHECK(std::isfinite(inc.information()));
    CHECK(std::abs(inc.information() - mutual_information_sequence(m, seq)) < 1e-6);
  }
}
