#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mfpne/rng.hpp"
#include "mfpne/testbeds.hpp"

namespace mfpne {

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

ActionGrid power_grid(const PowerConfig& c) {
  ActionGrid g = ActionGrid::uniform(c.min_db, c.max_db, c.grid_points);
  const double span = c.max_db - c.min_db;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double db = g.raw[i][0];
    g.features[i][0] = span > 0.0 ? 2.0 * (db - c.min_db) / span - 1.0 : 0.0;
  }
  return g;
}

}  // namespace

PowerOracle::PowerOracle(PowerConfig config, ProfileSpace space, std::uint64_t seed)
    : config_(std::move(config)),
      space_(std::move(space)),
      noise_(db_to_linear(config_.noise_db)),
      psi_(db_to_linear(config_.interference_db)) {
  const int N = space_.players();
  if (N != config_.links) throw std::invalid_argument("PowerOracle: space does not match link count");
  if (config_.truth_samples < 2) throw std::invalid_argument("PowerOracle: need at least two truth samples");
  for (int n = 0; n < N; ++n) {
    std::vector<double> p;
    for (const auto& a : space_.grid(n).raw) p.push_back(db_to_linear(a[0]));
    power_.push_back(std::move(p));
  }

  const auto P = static_cast<std::size_t>(space_.profiles());
  std::vector<std::vector<double>> sum(static_cast<std::size_t>(N), std::vector<double>(P, 0.0));
  auto sumsq = sum;
  Rng rng = make_rng(seed, 0x70);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> gain(static_cast<std::size_t>(N * N));
  // Linear powers per profile, laid out [x * N + n].
  std::vector<double> level(P * static_cast<std::size_t>(N));
  for (ProfileIndex x = 0; x < P; ++x)
    for (int n = 0; n < N; ++n)
      level[x * static_cast<std::size_t>(N) + static_cast<std::size_t>(n)] =
          power_[static_cast<std::size_t>(n)][space_.action(x, n)];
  for (std::size_t s = 0; s < config_.truth_samples; ++s) {
    for (int r = 0; r < N; ++r)
      for (int t = 0; t < N; ++t) gain[static_cast<std::size_t>(r * N + t)] = (r == t ? 1.0 : psi_) * expo(rng);
    for (ProfileIndex x = 0; x < P; ++x) {
      const double* p = level.data() + x * static_cast<std::size_t>(N);
      for (int n = 0; n < N; ++n) {
        const double* g = gain.data() + static_cast<std::size_t>(n * N);
        double interf = noise_;
        for (int t = 0; t < N; ++t)
          if (t != n) interf += g[t] * p[t];
        const double l = std::log1p(g[n] * p[n] / interf);
        sum[static_cast<std::size_t>(n)][x] += l;
        sumsq[static_cast<std::size_t>(n)][x] += l * l;
      }
    }
  }
  const double S = static_cast<double>(config_.truth_samples);
  truth_.assign(static_cast<std::size_t>(N), std::vector<double>(P));
  truth_se_ = truth_;
  double var_acc = 0.0;
  for (int n = 0; n < N; ++n) {
    for (ProfileIndex x = 0; x < P; ++x) {
      const double mean = sum[static_cast<std::size_t>(n)][x] / S;
      const double var = std::max(0.0, (sumsq[static_cast<std::size_t>(n)][x] - S * mean * mean) / (S - 1.0));
      truth_[static_cast<std::size_t>(n)][x] =
          mean - config_.penalty * power_[static_cast<std::size_t>(n)][space_.action(x, n)];
      truth_se_[static_cast<std::size_t>(n)][x] = std::sqrt(var / S);
      var_acc += var;
    }
  }
  single_variance_ = var_acc / (static_cast<double>(N) * static_cast<double>(P));
}

double PowerOracle::sample_mean(int n, ProfileIndex x, int count, Rng& rng) const {
  const int N = space_.players();
  std::exponential_distribution<double> expo(1.0);
  const double pn = power_[static_cast<std::size_t>(n)][space_.action(x, n)];
  double acc = 0.0;
  for (int s = 0; s < count; ++s) {
    const double direct = expo(rng);
    double interf = noise_;
    for (int t = 0; t < N; ++t)
      if (t != n) interf += psi_ * expo(rng) * power_[static_cast<std::size_t>(t)][space_.action(x, t)];
    acc += std::log1p(direct * pn / interf);
  }
  return acc / count - config_.penalty * pn;
}

double PowerOracle::observe(int n, ProfileIndex x, int m, Rng& rng) const {
  return sample_mean(n, x, config_.samples.at(static_cast<std::size_t>(m - 1)), rng);
}

double PowerOracle::true_utility(int n, ProfileIndex x) const { return truth_[static_cast<std::size_t>(n)][x]; }

double PowerOracle::sum_spectral_efficiency(ProfileIndex x) const {
  double s = 0.0;
  for (int n = 0; n < space_.players(); ++n)
    s += truth_[static_cast<std::size_t>(n)][x] +
         config_.penalty * power_[static_cast<std::size_t>(n)][space_.action(x, n)];
  return s;
}

double PowerOracle::truth_standard_error(int n, ProfileIndex x) const {
  return truth_se_[static_cast<std::size_t>(n)][x];
}

GameInstance make_power_instance(const PowerConfig& config, double budget, double eta, std::uint64_t seed) {
  if (config.links < 1) throw std::invalid_argument("power: need at least one link");
  if (config.samples.empty()) throw std::invalid_argument("power: empty fidelity ladder");
  for (std::size_t i = 1; i < config.samples.size(); ++i)
    if (config.samples[i] < config.samples[i - 1]) throw std::invalid_argument("power: sample counts must be nondecreasing");
  GameInstance inst;
  inst.testbed = "power";
  inst.seed = seed;
  inst.spec.space = ProfileSpace(std::vector<ActionGrid>(static_cast<std::size_t>(config.links), power_grid(config)));
  inst.spec.costs.clear();
  double log_mean = 0.0;
  for (int c : config.samples) {
    if (c < 1) throw std::invalid_argument("power: sample counts must be positive");
    inst.spec.costs.push_back(static_cast<double>(c) / config.samples.back());
    log_mean += std::log(static_cast<double>(c));
  }
  log_mean /= static_cast<double>(config.samples.size());
  auto oracle = std::make_shared<PowerOracle>(config, inst.spec.space, seed);
  inst.spec.kernel = config.surrogate;
  inst.spec.sigma2 = oracle->single_sample_variance() / std::exp(log_mean);
  inst.spec.Lambda = budget / static_cast<double>(config.samples.back());
  inst.spec.B = config.B;
  inst.spec.delta = config.delta;
  inst.spec.eta = eta;
  inst.table = std::make_shared<DissatisfactionTable>(DissatisfactionTable::exhaustive(oracle, inst.spec.space));
  inst.oracle = std::move(oracle);
  inst.spec.C = default_dissatisfaction_bound(*inst.table);
  inst.spec.validate();
  return inst;
}

}  // namespace mfpne
