#pragma once

#include <cmath>
#include <functional>

#include "vfbl/errors.hpp"

namespace vfbl {

enum class KernelKind { RiemannLiouville, Constant, Zero };

/// Convolution Volterra kernel K(t, r) = K(t - r).
///
/// RiemannLiouville is normalized so that Var(int_0^t K(t - r) dW_r) = scale^2 t^{2H}:
///   K(tau) = scale * sqrt(2H) * tau^{H - 1/2}.
struct Kernel {
  KernelKind kind = KernelKind::RiemannLiouville;
  double hurst = 0.5;
  double scale = 1.0;

  static Kernel riemann_liouville(double hurst, double scale = 1.0);
  static Kernel constant(double scale);
  static Kernel zero();

  /// Throws DomainError if the parameters violate the type invariants.
  void validate() const;

  bool is_singular() const { return kind == KernelKind::RiemannLiouville && hurst < 0.5; }
};

/// Kernel value as a function of the lag tau = t - r >= 0.
template <typename Scalar>
Scalar eval_kernel_lag(const Kernel& k, Scalar tau) {
  using std::pow;
  using std::sqrt;
  if (tau < Scalar(0)) throw DomainError("kernel evaluated at negative lag");
  switch (k.kind) {
    case KernelKind::Zero:
      return Scalar(0);
    case KernelKind::Constant:
      return Scalar(k.scale);
    case KernelKind::RiemannLiouville:
      if (tau == Scalar(0)) {
        if (k.hurst < 0.5) throw DiagonalSingularity("kernel is singular at zero lag for H < 1/2");
        if (k.hurst == 0.5) return Scalar(k.scale);
        return Scalar(0);
      }
      return Scalar(k.scale * std::sqrt(2.0 * k.hurst)) * pow(tau, Scalar(k.hurst - 0.5));
  }
  return Scalar(0);
}

/// K(t, r) for 0 <= r <= t.
template <typename Scalar>
Scalar eval_kernel(const Kernel& k, Scalar t, Scalar r) {
  if (r > t) throw DomainError("kernel requires r <= t");
  return eval_kernel_lag(k, t - r);
}

/// The shifted kernel K^t(s) = K(s - t), the bump direction of the pathwise derivative.
std::function<double(double)> shifted_kernel(const Kernel& k, double t);

/// int_0^{min(s,t)} K(s, r) K(t, r) dr.
double kernel_autocovariance(const Kernel& k, double s, double t);

/// The same integral computed by adaptive quadrature, also on the diagonal.
/// Exposed so the closed-form diagonal can be checked against it.
double kernel_autocovariance_quadrature(const Kernel& k, double s, double t);

}  // namespace vfbl
