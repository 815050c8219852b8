#include <cmath>
#include <stdexcept>

#include "mfpne/rng.hpp"
#include "mfpne/testbeds.hpp"

namespace mfpne {

namespace {

/// Symmetric square root V sqrt(max(L,0)) V^T of a PSD matrix.
Eigen::MatrixXd psd_root(const Eigen::MatrixXd& k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  const Eigen::VectorXd r = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * r.asDiagonal() * eig.eigenvectors().transpose();
}

/// 1-D RBF Gram matrix over one player's action features.
Eigen::MatrixXd player_gram(const ActionGrid& g, double coeff) {
  const auto K = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd out(K, K);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = 0; j < K; ++j)
      out(i, j) = std::exp(-coeff * squared_distance(as_span(g.features[static_cast<std::size_t>(i)]),
                                                      as_span(g.features[static_cast<std::size_t>(j)])));
  return out;
}

/// Draw from GP(0, exp(-coeff |x-x'|^2)) at every profile: (R_0 x ... x R_{N-1}) eps.
std::vector<double> kronecker_draw(const ProfileSpace& space, double coeff, Rng& rng) {
  const auto P = static_cast<std::size_t>(space.profiles());
  std::vector<double> v(P);
  std::normal_distribution<double> z(0.0, 1.0);
  for (auto& e : v) e = z(rng);
  for (int n = 0; n < space.players(); ++n) {
    const Eigen::MatrixXd R = psd_root(player_gram(space.grid(n), coeff));
    const std::size_t K = space.actions(n);
    const ProfileIndex s = space.stride(n);
    Eigen::VectorXd fiber(static_cast<Eigen::Index>(K));
    for (ProfileIndex x = 0; x < space.profiles(); ++x) {
      if (space.action(x, n) != 0) continue;
      for (std::size_t a = 0; a < K; ++a) fiber[static_cast<Eigen::Index>(a)] = v[x + a * s];
      const Eigen::VectorXd out = R * fiber;
      for (std::size_t a = 0; a < K; ++a) v[x + a * s] = out[static_cast<Eigen::Index>(a)];
    }
  }
  return v;
}

}  // namespace

SyntheticGame sample_synthetic_game(const KernelParams& generator, const ProfileSpace& space, std::uint64_t seed) {
  generator.validate();
  const FidelityKernel k(generator);
  const int M = k.fidelities();
  const auto P = static_cast<std::size_t>(space.profiles());
  SyntheticGame game;
  game.seed = seed;
  for (int n = 0; n < space.players(); ++n) {
    Rng rng = make_rng(seed, 100 + static_cast<std::uint64_t>(n));
    const std::vector<double> top = kronecker_draw(space, generator.h, rng);
    std::vector<std::vector<double>> residual;
    for (int l = 1; l < M; ++l) residual.push_back(kronecker_draw(space, generator.zeta[static_cast<std::size_t>(l - 1)], rng));
    std::vector<std::vector<double>> tables(static_cast<std::size_t>(M), std::vector<double>(P));
    for (int m = 1; m <= M; ++m) {
      auto& t = tables[static_cast<std::size_t>(m - 1)];
      const double a = k.top_weight(m);
      for (std::size_t x = 0; x < P; ++x) t[x] = a * top[x];
      for (int l = m; l < M; ++l) {
        const double c = k.residual_weight(l, m);
        const auto& r = residual[static_cast<std::size_t>(l - 1)];
        for (std::size_t x = 0; x < P; ++x) t[x] += c * r[x];
      }
    }
    game.tables.push_back(std::move(tables));
  }
  return game;
}

GameInstance make_synthetic_instance(const SyntheticConfig& config, double budget, double eta, std::uint64_t seed) {
  if (config.players < 1 || config.grid_points < 1) throw std::invalid_argument("synthetic: empty game");
  if (config.costs.empty()) throw std::invalid_argument("synthetic: empty cost ladder");
  std::vector<ActionGrid> grids(static_cast<std::size_t>(config.players),
                                ActionGrid::uniform(-1.0, 1.0, config.grid_points));
  GameInstance inst;
  inst.testbed = "synthetic";
  inst.seed = seed;
  inst.spec.space = ProfileSpace(std::move(grids));
  inst.spec.costs.clear();
  for (double c : config.costs) inst.spec.costs.push_back(c / config.costs.back());
  inst.spec.kernel = config.surrogate;
  inst.spec.sigma2 = config.sigma2;
  inst.spec.Lambda = budget;
  inst.spec.B = config.B;
  inst.spec.delta = config.delta;
  inst.spec.eta = eta;
  if (config.generator.fidelities() != static_cast<int>(config.costs.size()))
    throw std::invalid_argument("synthetic: generator fidelity count differs from cost ladder");

  SyntheticGame g = sample_synthetic_game(config.generator, inst.spec.space, seed);
  auto oracle = std::make_shared<TabularOracle>(std::move(g.tables), std::sqrt(config.sigma2));
  inst.table = std::make_shared<DissatisfactionTable>(DissatisfactionTable::exhaustive(oracle, inst.spec.space));
  inst.oracle = std::move(oracle);
  inst.spec.C = default_dissatisfaction_bound(*inst.table);
  inst.spec.validate();
  return inst;
}

}  // namespace mfpne
