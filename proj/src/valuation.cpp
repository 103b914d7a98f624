#include "vfbl/valuation.hpp"

#include <cmath>

#include "vfbl/black_scholes.hpp"

namespace vfbl {

void Payoff::validate() const {
  if (kind != PayoffKind::Identity && !(strike > 0.0)) throw DomainError("payoff strike must be positive");
  if (!std::isfinite(notional)) throw DomainError("payoff notional must be finite");
}

std::string to_string(PayoffKind kind) {
  switch (kind) {
    case PayoffKind::Call: return "call";
    case PayoffKind::Put: return "put";
    case PayoffKind::Digital: return "digital";
    case PayoffKind::Identity: return "identity";
  }
  return "unknown";
}

PayoffKind payoff_kind_from_string(const std::string& name) {
  if (name == "call") return PayoffKind::Call;
  if (name == "put") return PayoffKind::Put;
  if (name == "digital") return PayoffKind::Digital;
  if (name == "identity") return PayoffKind::Identity;
  throw ConfigError("unknown payoff kind '" + name + "'");
}

double payoff_gaussian_expectation(const Payoff& p, double mean, double var) {
  if (var <= 0.0) return payoff_eval(p, mean);
  const double forward = std::exp(mean + 0.5 * var);
  switch (p.kind) {
    case PayoffKind::Call: return p.notional * bs::call(forward, p.strike, var);
    case PayoffKind::Put: return p.notional * bs::put(forward, p.strike, var);
    case PayoffKind::Digital: return p.notional * bs::digital(forward, p.strike, var);
    case PayoffKind::Identity: return p.notional * forward;
  }
  return 0.0;
}

Vector ensemble_samples(const PathEnsemble& e, const Payoff& payoff, Estimator estimator) {
  const int m = e.n_local_steps();
  Vector out(e.n_paths());
  if (estimator == Estimator::Pathwise || m == 0) {
    for (int p = 0; p < e.n_paths(); ++p) out[p] = payoff_eval(payoff, e.X(p, m));
    return out;
  }
  // X_T | W ~ N(x - 1/2 int chi^2 + rho int chi dW, rho_bar^2 int chi^2).
  const double rho_bar2 = 1.0 - e.rho * e.rho;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < e.n_paths(); ++p) {
    double quad = 0.0;
    double stoch = 0.0;
    for (int k = 0; k < m; ++k) {
      const double vol = chi(e.V(p, k));
      quad += vol * vol * e.dt(k);
      stoch += vol * e.dW(p, k);
    }
    const double mean = e.X(p, 0) - 0.5 * quad + e.rho * stoch;
    out[p] = payoff_gaussian_expectation(payoff, mean, rho_bar2 * quad);
  }
  return out;
}

Vector price_samples(const ModelParams& params, const TimeGrid& grid, int t_index, const ForwardCurve& curve,
                     double x, const Payoff& payoff, int n_paths, std::uint64_t seed, Estimator estimator) {
  payoff.validate();
  const PathEnsemble e = conditional_forward(params, grid, t_index, curve, x, n_paths, seed);
  return ensemble_samples(e, payoff, estimator);
}

ValueEstimate summarize(const Vector& samples) {
  const auto n = samples.size();
  ValueEstimate est{0.0, 0.0, static_cast<int>(n)};
  if (n == 0) return est;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += samples[i];
  est.mean = sum / static_cast<double>(n);
  if (n < 2) return est;
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) ss += (samples[i] - est.mean) * (samples[i] - est.mean);
  est.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return est;
}

ValueEstimate price(const ModelParams& params, const TimeGrid& grid, int t_index, const ForwardCurve& curve,
                    double x, const Payoff& payoff, int n_paths, std::uint64_t seed, Estimator estimator) {
  return summarize(price_samples(params, grid, t_index, curve, x, payoff, n_paths, seed, estimator));
}

}  // namespace vfbl
