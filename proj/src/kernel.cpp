#include "vfbl/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "vfbl/quadrature.hpp"

namespace vfbl {

Kernel Kernel::riemann_liouville(double hurst, double scale) {
  Kernel k{KernelKind::RiemannLiouville, hurst, scale};
  k.validate();
  return k;
}

Kernel Kernel::constant(double scale) {
  Kernel k{KernelKind::Constant, 0.5, scale};
  k.validate();
  return k;
}

Kernel Kernel::zero() { return Kernel{KernelKind::Zero, 0.5, 1.0}; }

void Kernel::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("kernel scale must be positive");
  if (kind == KernelKind::RiemannLiouville && !(hurst > 0.0 && hurst < 1.0))
    throw DomainError("Riemann-Liouville kernel requires hurst in (0, 1)");
}

std::function<double(double)> shifted_kernel(const Kernel& k, double t) {
  if (t < 0.0) throw DomainError("shift time must be non-negative");
  return [k, t](double s) { return eval_kernel(k, s, t); };
}

double kernel_autocovariance_quadrature(const Kernel& k, double s, double t) {
  if (s < 0.0 || t < 0.0) throw DomainError("autocovariance requires non-negative times");
  if (k.kind != KernelKind::RiemannLiouville) {
    // K(s - r) K(t - r) is constant in r for these kinds.
    const double c = eval_kernel_lag(k, 1.0);
    return integrate_adaptive([c](double) { return c * c; }, 0.0, std::min(s, t)).value;
  }
  const double lo = std::min(s, t);
  const double gap = std::max(s, t) - lo;
  if (lo == 0.0) return 0.0;
  // int_0^lo v^a (gap + v)^a dv with v = w^q, chosen so the endpoint singularity becomes smooth.
  const double a = k.hurst - 0.5;
  const double q = a < 0.0 ? 1.0 / (2.0 * a + 1.0) : 1.0 / (a + 1.0);
  const auto integrand = [a, q, gap](double w) {
    const double v = std::pow(w, q);
    return q * std::pow(v, a) * std::pow(gap + v, a) * std::pow(w, q - 1.0);
  };
  const double prefactor = k.scale * k.scale * 2.0 * k.hurst;
  const double upper = std::pow(lo, 1.0 / q);
  return prefactor * integrate_adaptive(integrand, 0.0, upper, 1e-12 / prefactor).value;
}

double kernel_autocovariance(const Kernel& k, double s, double t) {
  if (s < 0.0 || t < 0.0) throw DomainError("autocovariance requires non-negative times");
  const double lo = std::min(s, t);
  switch (k.kind) {
    case KernelKind::Zero:
      return 0.0;
    case KernelKind::Constant:
      return k.scale * k.scale * lo;
    case KernelKind::RiemannLiouville:
      if (k.hurst == 0.5) return k.scale * k.scale * lo;
      if (s == t) return k.scale * k.scale * std::pow(s, 2.0 * k.hurst);
      return kernel_autocovariance_quadrature(k, s, t);
  }
  return 0.0;
}

}  // namespace vfbl
