#include "vfbl/pathderiv.hpp"

#include <cmath>

namespace vfbl {

BumpSpec BumpSpec::defaults(double v0, double x) {
  BumpSpec b;
  b.eps_x = 1e-3 * std::max(1.0, std::abs(x));
  b.eps_omega = 1e-2 * v0;
  return b;
}

void BumpSpec::validate() const {
  if (!(eps_x > 0.0) || !(eps_omega > 0.0)) throw DomainError("bump sizes must be positive");
}

namespace {

using Revalue = std::function<Vector(double shift)>;

DerivativeEstimate difference(const Revalue& revalue, double eps, BumpScheme scheme, bool richardson) {
  const auto at = [&](double h) {
    Vector diff;
    if (scheme == BumpScheme::Central) {
      diff = (revalue(h) - revalue(-h)) / (2.0 * h);
    } else {
      diff = (revalue(h) - revalue(0.0)) / h;
    }
    return summarize(diff);
  };
  const ValueEstimate full = at(eps);
  DerivativeEstimate out{full.mean, full.std_error, eps, std::nullopt};
  if (richardson) out.richardson_pair = std::make_pair(full.mean, at(0.5 * eps).mean);
  return out;
}

}  // namespace

DerivativeEstimate dx_u(const ModelParams& params, const TimeGrid& grid, int t_index, const ForwardCurve& curve,
                        double x, const Payoff& payoff, const BumpSpec& bump, int n_paths, std::uint64_t seed,
                        Estimator estimator) {
  bump.validate();
  const Revalue revalue = [&](double h) {
    return price_samples(params, grid, t_index, curve, x + h, payoff, n_paths, seed, estimator);
  };
  return difference(revalue, bump.eps_x, bump.scheme, bump.richardson);
}

DerivativeEstimate gateaux_omega_u(const ModelParams& params, const TimeGrid& grid, int t_index,
                                   const ForwardCurve& curve, double x, const Payoff& payoff,
                                   const Vector& direction, const BumpSpec& bump, int n_paths,
                                   std::uint64_t seed, Estimator estimator) {
  bump.validate();
  if (direction.size() != curve.values.size())
    throw IndexError("direction must cover the curve nodes");
  if (!direction.allFinite()) throw DirectionSingularity("direction is not finite on the curve nodes");
  const Revalue revalue = [&](double h) {
    ForwardCurve bumped = curve;
    bumped.values += h * direction;
    return price_samples(params, grid, t_index, bumped, x, payoff, n_paths, seed, estimator);
  };
  return difference(revalue, bump.eps_omega, bump.scheme, bump.richardson);
}

Vector sample_direction(const std::function<double(double)>& fn, const TimeGrid& grid, int t_index,
                        bool include_anchor) {
  const int n = grid.n_steps();
  if (t_index < 0 || t_index > n) throw IndexError("time index " + std::to_string(t_index));
  Vector out = Vector::Zero(n - t_index + 1);
  for (int i = include_anchor ? t_index : t_index + 1; i <= n; ++i) {
    double v;
    try {
      v = fn(grid[i]);
    } catch (const DiagonalSingularity& e) {
      throw DirectionSingularity(e.what());
    }
    if (!std::isfinite(v)) throw DirectionSingularity("direction not finite at node " + std::to_string(i));
    out[i - t_index] = v;
  }
  return out;
}

Vector kernel_direction(const Kernel& kernel, const TimeGrid& grid, int t_index) {
  if (t_index < 0 || t_index > grid.n_steps()) throw IndexError("time index " + std::to_string(t_index));
  return sample_direction(shifted_kernel(kernel, grid[t_index]), grid, t_index, false);
}

Vector discrete_kernel_direction(const Kernel& kernel, const TimeGrid& grid, int t_index) {
  const int n = grid.n_steps();
  if (t_index < 0 || t_index > n) throw IndexError("time index " + std::to_string(t_index));
  Vector out = Vector::Zero(n - t_index + 1);
  if (t_index == n) return out;
  const auto factor = volterra_factor(kernel, grid);
  out = factor->discrete_kernel.col(t_index).tail(n - t_index + 1);
  return out;
}

}  // namespace vfbl
