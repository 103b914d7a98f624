#pragma once

#include <cmath>

namespace vfbl::bs {

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Undiscounted call on a forward with total variance w = sigma^2 T.
inline double call(double forward, double strike, double total_var) {
  if (total_var <= 0.0) return std::max(forward - strike, 0.0);
  const double s = std::sqrt(total_var);
  const double d1 = (std::log(forward / strike) + 0.5 * total_var) / s;
  return forward * norm_cdf(d1) - strike * norm_cdf(d1 - s);
}

inline double put(double forward, double strike, double total_var) {
  return call(forward, strike, total_var) - forward + strike;
}

/// P(F e^{-w/2 + sqrt(w) Z} >= strike).
inline double digital(double forward, double strike, double total_var) {
  if (total_var <= 0.0) return forward >= strike ? 1.0 : 0.0;
  const double s = std::sqrt(total_var);
  return norm_cdf((std::log(forward / strike) - 0.5 * total_var) / s);
}

}  // namespace vfbl::bs
