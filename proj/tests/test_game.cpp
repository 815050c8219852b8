#include "doctest.h"

#include <random>
#include <sstream>

#include "mfpne/game.hpp"
#include "support.hpp"

using namespace mfpne;

namespace {

/// Prisoner's dilemma on actions {cooperate, defect}; profile index = 2 a_0 + a_1.
std::shared_ptr<TabularOracle> prisoners_dilemma() {
  std::vector<double> u0{3, 0, 5, 1};
  std::vector<double> u1{3, 5, 0, 1};
  return std::make_shared<TabularOracle>(std::vector<std::vector<std::vector<double>>>{{u0}, {u1}}, 0.0);
}

std::shared_ptr<TabularOracle> matching_pennies() {
  std::vector<double> u0{1, -1, -1, 1};
  std::vector<double> u1{-1, 1, 1, -1};
  return std::make_shared<TabularOracle>(std::vector<std::vector<std::vector<double>>>{{u0}, {u1}}, 0.0);
}

GameSpec spec_for(const ProfileSpace& space) {
  GameSpec s;
  s.space = space;
  s.costs = {1.0};
  s.kernel = KernelParams::uniform(1, 1.0, 1.0, 0.5);
  s.delta = 0.1 / space.players();
  return s;
}

}  // namespace

TEST_SUITE("profile_space") {
  TEST_CASE("mixed-radix encoding is lexicographic") {
    const auto space = support::scalar_space({3, 4, 2});
    CHECK(space.profiles() == 24);
    ProfileIndex x = 0;
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 4; ++b)
        for (std::size_t c = 0; c < 2; ++c) {
          const std::vector<std::size_t> t{a, b, c};
          CHECK(space.encode(t) == x);
          CHECK(space.decode(x) == t);
          ++x;
        }
  }

  TEST_CASE("columns vary one player only") {
    const auto space = support::scalar_space({3, 4, 2});
    for (ProfileIndex x = 0; x < space.profiles(); ++x)
      for (int n = 0; n < 3; ++n) {
        const auto col = space.column(x, n);
        CHECK(col.size() == space.actions(n));
        for (std::size_t a = 0; a < col.size(); ++a) {
          CHECK(space.action(col[a], n) == a);
          for (int k = 0; k < 3; ++k)
            if (k != n) CHECK(space.action(col[a], k) == space.action(x, k));
        }
      }
  }

  TEST_CASE("features concatenate per-player coordinates") {
    const auto space = support::scalar_space({3, 5});
    const Eigen::VectorXd f = space.features(space.encode(std::vector<std::size_t>{0, 4}));
    CHECK(f.size() == 2);
    CHECK(f[0] == -1.0);
    CHECK(f[1] == 1.0);
  }
}

TEST_SUITE("game") {
  TEST_CASE("prisoner's dilemma dissatisfaction") {
    const auto space = support::scalar_space({2, 2});
    const auto oracle = prisoners_dilemma();
    const auto t = DissatisfactionTable::exhaustive(oracle, space);
    CHECK(t.f(0, 0) == 2.0);
    CHECK(t.f(1, 0) == 2.0);
    CHECK(t.f(0, 1) == 1.0);
    CHECK(t.f(1, 1) == 0.0);
    CHECK(t.f(0, 3) == 0.0);
    CHECK(t.f(1, 3) == 0.0);
    CHECK(t.eps_star() == 0.0);
    CHECK(t.argmin_profile() == 3);
    CHECK(t.max_dissatisfaction() == 2.0);
    CHECK(dissatisfaction(*oracle, space, 0, 2) == 0.0);
  }

  TEST_CASE("matching pennies has no pure equilibrium") {
    const auto space = support::scalar_space({2, 2});
    const auto t = DissatisfactionTable::exhaustive(matching_pennies(), space);
    CHECK(t.eps_star() == 2.0);
    CHECK(t.argmin_profile() == 0);
  }

  TEST_CASE("eps* equals an independent enumeration") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::size_t> sz(1, 6);
    for (int rep = 0; rep < 25; ++rep) {
      std::vector<std::size_t> sizes(static_cast<std::size_t>(1 + rep % 3));
      for (auto& s : sizes) s = sz(rng);
      const auto space = support::scalar_space(sizes);
      const auto oracle = support::random_tabular(space, 1, rng);
      CHECK(epsilon_star(*oracle, spec_for(space)).value == support::brute_force_eps_star(*oracle, space));
    }
  }

  TEST_CASE("planted equilibrium gives eps* = 0") {
    std::mt19937_64 rng(22);
    const auto space = support::scalar_space({4, 3, 5});
    auto oracle = support::random_tabular(space, 1, rng);
    auto tables = oracle->tables();
    const ProfileIndex planted = space.encode(std::vector<std::size_t>{2, 1, 3});
    for (int n = 0; n < 3; ++n) tables[static_cast<std::size_t>(n)][0][planted] = 2.0;
    const TabularOracle o(tables, 0.0);
    const auto e = epsilon_star(o, spec_for(space));
    CHECK(e.value == 0.0);
    CHECK(e.profile == planted);
  }

  TEST_CASE("dissatisfaction is nonnegative and zero at column maxima") {
    std::mt19937_64 rng(23);
    const auto space = support::scalar_space({5, 4});
    const auto oracle = support::random_tabular(space, 1, rng);
    const auto t = DissatisfactionTable::exhaustive(oracle, space);
    for (ProfileIndex x = 0; x < space.profiles(); ++x)
      for (int n = 0; n < 2; ++n) {
        CHECK(t.f(n, x) >= 0.0);
        const auto col = space.column(x, n);
        std::size_t zeros = 0;
        for (auto c : col) zeros += t.f(n, c) == 0.0;
        CHECK(zeros >= 1);
      }
  }

  TEST_CASE("serial and parallel tables agree") {
    std::mt19937_64 rng(24);
    const auto space = support::scalar_space({9, 8, 7});
    const auto oracle = support::random_tabular(space, 1, rng);
    const auto a = DissatisfactionTable::exhaustive(oracle, space, Execution::serial);
    const auto b = DissatisfactionTable::exhaustive(oracle, space, Execution::parallel);
    CHECK(a.eps_star() == b.eps_star());
    CHECK(a.argmin_profile() == b.argmin_profile());
    for (ProfileIndex x = 0; x < space.profiles(); ++x) CHECK(a.max_f(x) == b.max_f(x));
  }

  TEST_CASE("on-demand table evaluates the oracle") {
    std::mt19937_64 rng(25);
    const auto space = support::scalar_space({4, 4});
    const auto oracle = support::random_tabular(space, 1, rng);
    const auto dense = DissatisfactionTable::exhaustive(oracle, space);
    const auto lazy = DissatisfactionTable::on_demand(oracle, space, dense.eps_star(), dense.argmin_profile(),
                                                      dense.max_dissatisfaction());
    CHECK_FALSE(lazy.dense());
    for (ProfileIndex x = 0; x < space.profiles(); ++x) CHECK(lazy.max_f(x) == dense.max_f(x));
    std::ostringstream os;
    CHECK_THROWS_AS(lazy.write_csv(os), std::logic_error);
  }

  TEST_CASE("CSV export") {
    const auto space = support::scalar_space({2, 2});
    const auto t = DissatisfactionTable::exhaustive(prisoners_dilemma(), space);
    std::ostringstream os;
    t.write_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "profile,a_0,a_1,f_0,f_1,max_f,eps_star");
    std::getline(is, line);
    CHECK(line == "0,0,0,2,2,2,0");
  }

  TEST_CASE("reward is zero unless every fidelity is the top one") {
    const auto space = support::scalar_space({2, 2});
    const auto t = DissatisfactionTable::exhaustive(prisoners_dilemma(), space);
    GameSpec s = spec_for(space);
    s.costs = {0.5, 1.0};
    s.kernel = KernelParams::uniform(2, 1, 1, 0.5);
    s.C = 4.0;
    CHECK(reward(s, t, 0, {2, 2}) == 0.5);
    CHECK(reward(s, t, 3, {2, 2}) == 1.0);
    CHECK(reward(s, t, 3, {1, 2}) == 0.0);
  }

  TEST_CASE("cumulative regret arithmetic") {
    const auto space = support::scalar_space({2, 2});
    const auto t = DissatisfactionTable::exhaustive(prisoners_dilemma(), space);
    GameSpec s = spec_for(space);
    s.costs = {0.25, 1.0};
    s.kernel = KernelParams::uniform(2, 1, 1, 0.5);
    s.C = 4.0;
    s.Lambda = 10.0;
    EpisodeLog e;
    e.exploration.push_back({{0, {1, 1}}, {0.0, 0.0}, 0.5});
    e.evaluation = {{0, {2, 2}}, {0.0, 0.0}, 2.0};
    e.spend = 2.5;
    e.final_dissatisfaction = 2.0;
    // (2.5 / 2)(1 - 0/4) - (1 - 2/4) = 0.75
    const auto r = cumulative_regret(s, t, {e});
    CHECK(r.total == doctest::Approx(0.75));

    EpisodeLog bad = e;
    bad.spend = 3.0;
    CHECK_THROWS_AS(cumulative_regret(s, t, {bad}), IntegrityError);
    s.Lambda = 2.0;
    CHECK_THROWS_AS(cumulative_regret(s, t, {e}), IntegrityError);
  }

  TEST_CASE("simple regret uses the best visited profile") {
    const auto space = support::scalar_space({2, 2});
    const auto t = DissatisfactionTable::exhaustive(prisoners_dilemma(), space);
    CHECK(simple_pne_regret(t, {0, 1}) == 1.0);
    CHECK(simple_pne_regret(t, {0, 3}) == 0.0);
    CHECK_THROWS_AS(simple_pne_regret(t, {}), std::invalid_argument);
  }

  TEST_CASE("specification validation") {
    GameSpec s = spec_for(support::scalar_space({2, 2}));
    CHECK_NOTHROW(s.validate());
    GameSpec bad = s;
    bad.delta = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.costs = {0.5};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.eta = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.Lambda = 3.0;
    CHECK_THROWS_AS(bad.validate_budget(), std::invalid_argument);
    bad.Lambda = 4.0;
    CHECK_NOTHROW(bad.validate_budget());
  }

  TEST_CASE("tabular observations are unbiased with the configured noise") {
    const auto space = support::scalar_space({2, 2});
    TabularOracle o({{{0.0, 1.0, 2.0, 3.0}, {0.5, 1.5, 2.5, 3.5}}, {{0, 0, 0, 0}, {1, 1, 1, 1}}}, 0.2);
    Rng rng(1);
    double s = 0.0, s2 = 0.0;
    const int S = 50000;
    for (int i = 0; i < S; ++i) {
      const double y = o.observe(0, 2, 1, rng);
      s += y;
      s2 += y * y;
    }
    const double mean = s / S;
    CHECK(std::abs(mean - 2.0) < 4 * 0.2 / std::sqrt(S));
    CHECK(std::abs(s2 / S - mean * mean - 0.04) < 0.002);
    CHECK(o.true_utility(0, 2) == 2.5);
  }
}
