#pragma once

#include <cstdint>
#include <string>

#include "vfbl/paths.hpp"

namespace vfbl {

enum class PayoffKind { Call, Put, Digital, Identity };

/// Terminal payoff G(e^{x_T}), times a notional.
struct Payoff {
  PayoffKind kind = PayoffKind::Call;
  double strike = 100.0;
  double notional = 1.0;

  void validate() const;
};

std::string to_string(PayoffKind kind);
PayoffKind payoff_kind_from_string(const std::string& name);

template <typename Scalar>
Scalar payoff_eval(const Payoff& p, Scalar x_T) {
  using std::exp;
  using std::max;
  const Scalar s = exp(x_T);
  switch (p.kind) {
    case PayoffKind::Call:
      return p.notional * max(s - Scalar(p.strike), Scalar(0));
    case PayoffKind::Put:
      return p.notional * max(Scalar(p.strike) - s, Scalar(0));
    case PayoffKind::Digital:
      return p.notional * (s >= Scalar(p.strike) ? Scalar(1) : Scalar(0));
    case PayoffKind::Identity:
      return p.notional * s;
  }
  return Scalar(0);
}

/// E[G(e^{X_T})] when X_T ~ N(mean, var): the payoff integrated in closed form.
double payoff_gaussian_expectation(const Payoff& p, double mean, double var);

struct ValueEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_paths = 0;
};

/// Pathwise averages G(e^{X_T}); Mixing integrates out B given the W path, which is
/// unbiased for the same value and smooth in (x, curve).
enum class Estimator { Pathwise, Mixing };

/// Per-path samples whose mean is the value u(t, curve, x).
Vector price_samples(const ModelParams& params, const TimeGrid& grid, int t_index, const ForwardCurve& curve,
                     double x, const Payoff& payoff, int n_paths, std::uint64_t seed,
                     Estimator estimator = Estimator::Pathwise);

/// Terminal per-path samples of an already simulated ensemble.
Vector ensemble_samples(const PathEnsemble& ensemble, const Payoff& payoff, Estimator estimator);

ValueEstimate summarize(const Vector& samples);

ValueEstimate price(const ModelParams& params, const TimeGrid& grid, int t_index, const ForwardCurve& curve,
                    double x, const Payoff& payoff, int n_paths, std::uint64_t seed,
                    Estimator estimator = Estimator::Pathwise);

}  // namespace vfbl
