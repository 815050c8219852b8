#include "mfpne/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace mfpne {

double compute_beta(const GameSpec& spec, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("compute_beta: negative gamma");
  return spec.B + 4.0 * std::sqrt(spec.sigma2) * std::sqrt(1.0 + gamma + std::log(1.0 / spec.delta));
}

GammaChain::GammaChain(MogpModel start, std::vector<Eigen::VectorXd> points, Execution exec)
    : model_(std::move(start)), exec_(exec) {
  if (points.empty()) throw std::invalid_argument("GammaChain: empty point set");
  const int M = model_.fidelities();
  cache_.sync(model_, exec_);
  for (auto& p : points) cache_.add(std::move(p), M, model_);
}

double GammaChain::value(std::size_t horizon) {
  const int M = model_.fidelities();
  while (computed() < horizon) {
    std::size_t best = 0;
    double best_var = -1.0;
    for (std::size_t s = 0; s < cache_.size(); ++s) {
      const double v = cache_.variance(s);
      if (v > best_var) {
        best_var = v;
        best = s;
      }
    }
    sums_.push_back(sums_.back() + mutual_information_from_variance(best_var, model_.noise_variance()));
    model_.append({cache_.input(best), M, 0.0});
    cache_.sync(model_, exec_);
  }
  return sums_[horizon];
}

double estimate_gamma(const MogpModel& model, const GameSpec& spec, std::size_t horizon) {
  if (horizon < 1) throw std::invalid_argument("estimate_gamma: horizon must be >= 1");
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(spec.space.profiles()));
  for (ProfileIndex x = 0; x < spec.space.profiles(); ++x) pts.push_back(spec.space.features(x));
  GammaChain chain(model, std::move(pts));
  return chain.value(horizon);
}

ConfidenceState build_confidence_state(const SurrogateSet& surrogates, const std::vector<double>& beta,
                                       const std::vector<double>& gamma, Execution exec) {
  const int N = surrogates.players();
  const auto& space = surrogates.spec().space;
  if (beta.size() != static_cast<std::size_t>(N)) throw std::invalid_argument("build_confidence_state: beta size");

  ConfidenceState st;
  st.profiles = surrogates.candidates();
  st.beta = beta;
  st.gamma = gamma;
  const std::size_t P = st.profiles.size();
  auto grid = [&] { return std::vector<std::vector<double>>(static_cast<std::size_t>(N), std::vector<double>(P)); };
  st.mean = grid();
  st.sd = grid();
  st.u_lo = grid();
  st.u_hi = grid();
  st.f_lo = grid();
  st.f_hi = grid();
  st.best_response_hi.assign(static_cast<std::size_t>(N), std::vector<ProfileIndex>(P));

  for (int n = 0; n < N; ++n) {
    const auto& cache = surrogates.cache(n);
    const double b = beta[static_cast<std::size_t>(n)];
    const std::size_t K = space.actions(n);
    const ProfileIndex stride = space.stride(n);
    auto& mean = st.mean[static_cast<std::size_t>(n)];
    auto& sd = st.sd[static_cast<std::size_t>(n)];
    auto& ulo = st.u_lo[static_cast<std::size_t>(n)];
    auto& uhi = st.u_hi[static_cast<std::size_t>(n)];
    auto& flo = st.f_lo[static_cast<std::size_t>(n)];
    auto& fhi = st.f_hi[static_cast<std::size_t>(n)];
    auto& br = st.best_response_hi[static_cast<std::size_t>(n)];

#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(P); ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const ProfileIndex x = st.profiles[i];
      const auto s = static_cast<std::size_t>(surrogates.top_slot(x));
      const double mu = cache.mean(s);
      const double sig = std::sqrt(cache.variance(s));
      mean[i] = mu;
      sd[i] = sig;
      ulo[i] = mu - b * sig;
      uhi[i] = mu + b * sig;

      const ProfileIndex base = x - space.action(x, n) * stride;
      double col_lo = -std::numeric_limits<double>::infinity();
      double col_hi = -std::numeric_limits<double>::infinity();
      ProfileIndex arg_hi = base;
      for (std::size_t a = 0; a < K; ++a) {
        const ProfileIndex y = base + a * stride;
        const auto sy = static_cast<std::size_t>(surrogates.top_slot(y));
        const double m = cache.mean(sy);
        const double v = std::sqrt(cache.variance(sy));
        col_lo = std::max(col_lo, m - b * v);
        if (m + b * v > col_hi) {
          col_hi = m + b * v;
          arg_hi = y;
        }
      }
      flo[i] = col_lo - uhi[i];
      fhi[i] = col_hi - ulo[i];
      br[i] = arg_hi;
    }
  }
  return st;
}

std::size_t reported_profile(const ConfidenceState& state) {
  if (state.size() == 0) throw std::invalid_argument("reported_profile: empty state");
  const std::size_t N = state.f_lo.size();
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.size(); ++i) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < N; ++n) worst = std::max(worst, state.f_lo[n][i]);
    if (worst < best_val) {
      best_val = worst;
      best = i;
    }
  }
  return best;
}

ExploringChoice exploring_profile(const ConfidenceState& state, std::size_t reported) {
  const std::size_t N = state.f_hi.size();
  ExploringChoice out;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < N; ++n) {
    if (state.f_hi[n][reported] > worst) {
      worst = state.f_hi[n][reported];
      out.worst_player = static_cast<int>(n);
    }
  }
  out.profile = state.best_response_hi[static_cast<std::size_t>(out.worst_player)][reported];
  return out;
}

ProfileIndex final_evaluation_profile(const SurrogateSet& surrogates, ProfileIndex reported,
                                      ProfileIndex exploring) {
  if (reported == exploring) return reported;
  const int M = surrogates.fidelities();
  auto max_var = [&](ProfileIndex x) {
    double v = 0.0;
    for (int n = 0; n < surrogates.players(); ++n) v = std::max(v, surrogates.posterior(n, x, M).variance);
    return v;
  };
  return max_var(exploring) > max_var(reported) ? exploring : reported;
}

void ConfidenceState::write_csv(std::ostream& os, const ProfileSpace& space) const {
  const std::size_t N = mean.size();
  os << "profile";
  for (std::size_t n = 0; n < N; ++n) os << ",a_" << n;
  for (std::size_t n = 0; n < N; ++n)
    os << ",mean_" << n << ",sd_" << n << ",u_lo_" << n << ",u_hi_" << n << ",f_lo_" << n << ",f_hi_" << n;
  os << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    os << profiles[i];
    for (std::size_t n = 0; n < N; ++n) os << ',' << space.action(profiles[i], static_cast<int>(n));
    for (std::size_t n = 0; n < N; ++n)
      os << ',' << mean[n][i] << ',' << sd[n][i] << ',' << u_lo[n][i] << ',' << u_hi[n][i] << ',' << f_lo[n][i]
         << ',' << f_hi[n][i];
    os << '\n';
  }
}

}  // namespace mfpne
