#pragma once

#include <span>
#include <vector>

namespace mfpne {

/// Hyperparameters of the auto-regressive multi-fidelity RBF kernel.
///
/// Fidelities are 1-based: level M is the true utility, level m < M is
///   u^(m) = rho[m] u^(m+1) + sqrt(1 - rho[m]^2) q^(m),
/// with u^(M) ~ GP(0, exp(-h |x-x'|^2)) and q^(m) ~ GP(0, exp(-zeta[m] |x-x'|^2)).
/// `zeta` and `rho` hold levels 1..M-1 at indices 0..M-2.
struct KernelParams {
  double h = 1.0;
  std::vector<double> zeta;
  std::vector<double> rho;

  int fidelities() const { return static_cast<int>(rho.size()) + 1; }

  /// Throws std::invalid_argument on h <= 0, zeta <= 0, rho outside (0,1) or
  /// mismatched zeta/rho lengths.
  void validate() const;

  /// Same value for every residual level.
  static KernelParams uniform(int fidelities, double h, double zeta, double rho);
};

/// Precomputed closed form of the cascade covariance.
///
/// cov(u^(m)(x), u^(m2)(x2)) = A_m A_m2 k_h(x,x2)
///   + sum_{l = max(m,m2)}^{M-1} c_l^m c_l^m2 k_zeta_l(x,x2)
/// with A_m = prod_{i=m}^{M-1} rho_i and c_l^m = (prod_{i=m}^{l-1} rho_i) sqrt(1-rho_l^2).
class FidelityKernel {
 public:
  explicit FidelityKernel(KernelParams params);

  const KernelParams& params() const { return params_; }
  int fidelities() const { return fidelities_; }

  /// Covariance for squared input distance `sq_dist`.
  double operator()(double sq_dist, int m, int m2) const;

  double operator()(std::span<const double> x, int m, std::span<const double> x2, int m2) const;

  /// Coefficient A_m on the top-fidelity component.
  double top_weight(int m) const { return top_[m - 1]; }
  /// Coefficient c_l^m on residual component l (0 when l < m).
  double residual_weight(int level, int m) const;

 private:
  void check_fidelity(int m) const;

  KernelParams params_;
  int fidelities_;
  std::vector<double> top_;       // [m-1]
  std::vector<double> residual_;  // [(l-1) * M + (m-1)]
};

/// Covariance between (x, m) and (x2, m2) for hyperparameters `p`.
double kernel_eval(const KernelParams& p, std::span<const double> x, int m,
                   std::span<const double> x2, int m2);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace mfpne
