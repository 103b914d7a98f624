#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "vfbl/valuation.hpp"

namespace vfbl {

enum class BumpScheme { Central, Forward };

struct BumpSpec {
  double eps_x = 1e-3;
  double eps_omega = 4e-4;
  BumpScheme scheme = BumpScheme::Central;
  bool richardson = true;  // also evaluate at eps / 2

  /// eps_x = 1e-3 max(1, |x|), eps_omega = 1e-2 v0.
  static BumpSpec defaults(double v0, double x);
  void validate() const;
};

struct DerivativeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double eps_used = 0.0;
  std::optional<std::pair<double, double>> richardson_pair;  // (value at eps, value at eps / 2)
};

/// d/dx u(t, curve, x) by bump-and-revalue with common random numbers.
DerivativeEstimate dx_u(const ModelParams& params, const TimeGrid& grid, int t_index, const ForwardCurve& curve,
                        double x, const Payoff& payoff, const BumpSpec& bump, int n_paths, std::uint64_t seed,
                        Estimator estimator = Estimator::Pathwise);

/// <d_omega u(t, curve, x), direction>, with direction given on the nodes t_index..n.
/// Throws DirectionSingularity if the direction is not finite.
DerivativeEstimate gateaux_omega_u(const ModelParams& params, const TimeGrid& grid, int t_index,
                                   const ForwardCurve& curve, double x, const Payoff& payoff,
                                   const Vector& direction, const BumpSpec& bump, int n_paths,
                                   std::uint64_t seed, Estimator estimator = Estimator::Pathwise);

/// Samples fn on the nodes t_index..n. The anchor node is set to 0 unless include_anchor.
Vector sample_direction(const std::function<double(double)>& fn, const TimeGrid& grid, int t_index,
                        bool include_anchor);

/// K^t(s) = K(s - t) on the strictly future nodes; zero at s = t.
Vector kernel_direction(const Kernel& kernel, const TimeGrid& grid, int t_index);

/// The direction in which one unit of dW over [t, t + dt] moves the simulated curve,
/// i.e. the discrete kernel column at t. Coincides with kernel_direction for H = 1/2.
Vector discrete_kernel_direction(const Kernel& kernel, const TimeGrid& grid, int t_index);

}  // namespace vfbl
