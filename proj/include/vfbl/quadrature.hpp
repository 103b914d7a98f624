#pragma once

#include <functional>

namespace vfbl {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) integration on [a, b].
/// Throws QuadratureFailure if abs_tol is not met within max_intervals subdivisions.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol = 1e-12, int max_intervals = 2000);

}  // namespace vfbl
