#include "mfpne/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mfpne {

void KernelParams::validate() const {
  if (!(h > 0.0)) throw std::invalid_argument("kernel: h must be positive");
  if (zeta.size() != rho.size())
    throw std::invalid_argument("kernel: zeta and rho must both have M-1 entries");
  for (double z : zeta)
    if (!(z > 0.0)) throw std::invalid_argument("kernel: zeta must be positive");
  for (double r : rho)
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("kernel: rho must lie in (0,1)");
}

KernelParams KernelParams::uniform(int fidelities, double h, double zeta, double rho) {
  if (fidelities < 1) throw std::invalid_argument("kernel: need at least one fidelity");
  KernelParams p;
  p.h = h;
  p.zeta.assign(fidelities - 1, zeta);
  p.rho.assign(fidelities - 1, rho);
  return p;
}

FidelityKernel::FidelityKernel(KernelParams params)
    : params_(std::move(params)), fidelities_(params_.fidelities()) {
  params_.validate();
  const int M = fidelities_;
  top_.assign(M, 1.0);
  for (int m = M - 1; m >= 1; --m) top_[m - 1] = params_.rho[m - 1] * top_[m];

  residual_.assign(static_cast<std::size_t>(M) * M, 0.0);
  for (int l = 1; l < M; ++l) {
    const double s = std::sqrt(1.0 - params_.rho[l - 1] * params_.rho[l - 1]);
    double prefix = 1.0;  // prod_{i=m}^{l-1} rho_i, built for m = l, l-1, ..., 1
    for (int m = l; m >= 1; --m) {
      if (m < l) prefix *= params_.rho[m - 1];
      residual_[(l - 1) * M + (m - 1)] = prefix * s;
    }
  }
}

void FidelityKernel::check_fidelity(int m) const {
  if (m < 1 || m > fidelities_)
    throw std::invalid_argument("kernel: fidelity " + std::to_string(m) + " outside 1.." +
                                std::to_string(fidelities_));
}

double FidelityKernel::residual_weight(int level, int m) const {
  check_fidelity(m);
  if (level < 1 || level >= fidelities_) throw std::invalid_argument("kernel: bad residual level");
  return residual_[(level - 1) * fidelities_ + (m - 1)];
}

double FidelityKernel::operator()(double sq_dist, int m, int m2) const {
  check_fidelity(m);
  check_fidelity(m2);
  const int M = fidelities_;
  double cov = top_[m - 1] * top_[m2 - 1] * std::exp(-params_.h * sq_dist);
  for (int l = std::max(m, m2); l < M; ++l) {
    const double w = residual_[(l - 1) * M + (m - 1)] * residual_[(l - 1) * M + (m2 - 1)];
    cov += w * std::exp(-params_.zeta[l - 1] * sq_dist);
  }
  return cov;
}

double FidelityKernel::operator()(std::span<const double> x, int m, std::span<const double> x2,
                                  int m2) const {
  return (*this)(squared_distance(x, x2), m, m2);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kernel: input dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double kernel_eval(const KernelParams& p, std::span<const double> x, int m,
                   std::span<const double> x2, int m2) {
  return FidelityKernel(p)(x, m, x2, m2);
}

}  // namespace mfpne
