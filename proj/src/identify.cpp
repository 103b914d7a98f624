#include "vfbl/identify.hpp"

#include <cmath>
#include <limits>

#include "vfbl/rng.hpp"

namespace vfbl {
namespace {

enum Stream : std::uint64_t { kOuter = 1, kLhs = 2, kRhs = 3, kMartingale = 4 };

std::uint64_t stream_seed(std::uint64_t seed, Stream stream, std::uint64_t state, std::uint64_t batch = 0) {
  return derive_seed(derive_seed(derive_seed(seed, stream), state), batch);
}

struct OuterState {
  ForwardCurve curve;
  double x;
};

std::vector<OuterState> sample_states(const IdentityConfig& c) {
  const PathEnsemble outer = simulate_joint(c.model, c.grid, c.n_states, stream_seed(c.seed, kOuter, 0));
  std::vector<OuterState> states;
  for (int i = 0; i < c.n_states; ++i) states.push_back({theta_curve(outer, i, c.t_index), outer.X(i, c.t_index)});
  return states;
}

// Batch means of a first-step quantity of the local BSDE started at the state.
template <typename Extract>
ValueEstimate local_bsde_estimate(const IdentityConfig& c, const OuterState& s, int state, Extract extract) {
  const int batches = std::max(1, c.lhs_batches);
  const int per_batch = std::max(1, c.inner_paths / batches);
  Vector values(batches);
  for (int b = 0; b < batches; ++b) {
    const PathEnsemble e = conditional_forward(c.model, c.grid, c.t_index, s.curve, s.x, per_batch,
                                               stream_seed(c.seed, kLhs, static_cast<std::uint64_t>(state),
                                                           static_cast<std::uint64_t>(b)));
    const BsdeSolution sol = solve_bsde(e, c.payoff, Driver::zero(), c.basis, c.bsde);
    values[b] = extract(sol, e);
  }
  return summarize(values);
}

Vector direction_for(const IdentityConfig& c) {
  return c.direction == DirectionKind::DiscreteKernel ? discrete_kernel_direction(c.model.kernel, c.grid, c.t_index)
                                                      : kernel_direction(c.model.kernel, c.grid, c.t_index);
}

template <typename PerState>
IdentityReport run_states(const IdentityConfig& c, const std::string& which, PerState per_state) {
  c.model.validate();
  c.payoff.validate();
  if (c.t_index < 0 || c.t_index >= c.grid.n_steps())
    throw IndexError("identity checks need t_index in [0, n)");
  if (c.n_states < 1) throw DomainError("n_states must be positive");
  IdentityReport report{which, c.t_index, c.n_states, {}, {}};
  const std::vector<OuterState> states = sample_states(c);
  for (int i = 0; i < c.n_states; ++i) {
    StateRecord r;
    r.state = i;
    r.x = states[static_cast<std::size_t>(i)].x;
    r.v = states[static_cast<std::size_t>(i)].curve.values[0];
    try {
      per_state(states[static_cast<std::size_t>(i)], i, r);
      r.z = z_score(r.lhs, r.lhs_se, r.rhs, r.rhs_se);
    } catch (const Error& e) {
      r.error = e.what();
    }
    report.records.push_back(r);
  }
  aggregate_report(report, c.thresholds);
  return report;
}

}  // namespace

IdentityConfig default_identity_config() {
  IdentityConfig c;
  c.model.rho = -0.7;
  c.model.x0 = std::log(100.0);
  c.model.v0 = 0.04;
  c.model.kernel = Kernel::riemann_liouville(0.3, 0.02);
  c.grid = TimeGrid::uniform(1.0, 32);
  c.payoff = Payoff{PayoffKind::Call, 100.0, 1.0};
  c.t_index = 16;
  c.bump = BumpSpec::defaults(c.model.v0, c.model.x0);
  c.bump.richardson = false;
  c.basis.use_forward_variance = true;
  c.basis.bs_proxy = true;
  c.bsde.z_estimator = ZEstimator::JointRegression;
  return c;
}

PsiEstimates reconstruct_psi(const BsdeSolution& solution, const PathEnsemble& ensemble, int t_local,
                             const Vector* dxu, const Vector* dxu_se, bool flip_rho_sign) {
  if (t_local < 0 || t_local >= solution.n_steps()) throw IndexError("time index " + std::to_string(t_local));
  if (solution.Y.rows() != ensemble.n_paths() || !(solution.grid == ensemble.grid) ||
      solution.start != ensemble.start)
    throw DomainError("solution and ensemble do not share a grid");
  const int n = ensemble.n_paths();
  const double rho = flip_rho_sign ? -ensemble.rho : ensemble.rho;
  const double rho_bar = std::sqrt(1.0 - ensemble.rho * ensemble.rho);
  PsiEstimates out{Vector(n), Vector(n)};
  if (dxu) {
    if (dxu->size() != n) throw IndexError("dxu must have one entry per path");
    for (int p = 0; p < n; ++p) {
      const double vol = chi(ensemble.V(p, t_local));
      const double se_d = dxu_se ? (*dxu_se)[p] : 0.0;
      out.value[p] = solution.Z2(p, t_local) - rho * vol * (*dxu)[p];
      out.std_error[p] = std::hypot(solution.Z2_se(p, t_local), rho * vol * se_d);
    }
    return out;
  }
  if (!(rho_bar > 0.0)) throw DomainError("regression proxy for d_x u needs rho_bar > 0");
  const double ratio = rho / rho_bar;
  for (int p = 0; p < n; ++p) {
    out.value[p] = solution.Z2(p, t_local) - ratio * solution.Z1(p, t_local);
    out.std_error[p] = std::hypot(solution.Z2_se(p, t_local), ratio * solution.Z1_se(p, t_local));
  }
  return out;
}

double z_score(double lhs, double lhs_se, double rhs, double rhs_se) {
  const double diff = lhs - rhs;
  const double denom = std::hypot(lhs_se, rhs_se);
  if (denom > 0.0) return diff / denom;
  if (diff == 0.0) return 0.0;
  return std::copysign(std::numeric_limits<double>::max(), diff);
}

void aggregate_report(IdentityReport& report, const IdentityThresholds& th) {
  IdentityAggregate& a = report.aggregate;
  a = {};
  std::vector<const StateRecord*> ok;
  for (const auto& r : report.records)
    if (!r.error) ok.push_back(&r);
  const double total = static_cast<double>(report.records.size());
  if (ok.empty() || total == 0.0) return;
  int within = 0;
  double sum_abs_z = 0.0;
  double ml = 0.0, mr = 0.0;
  for (const auto* r : ok) {
    within += std::abs(r->z) <= th.z_max;
    sum_abs_z += std::abs(r->z);
    ml += r->lhs;
    mr += r->rhs;
  }
  const double k = static_cast<double>(ok.size());
  a.fraction_within = within / total;
  a.mean_abs_z = sum_abs_z / k;
  ml /= k;
  mr /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto* r : ok) {
    sxx += (r->rhs - mr) * (r->rhs - mr);
    sxy += (r->rhs - mr) * (r->lhs - ml);
    syy += (r->lhs - ml) * (r->lhs - ml);
  }
  a.degenerate = ok.size() < 3 || sxx / k < th.degenerate_variance;
  if (!a.degenerate) {
    a.slope = sxy / sxx;
    a.intercept = ml - a.slope * mr;
    a.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  }
  const bool fraction_ok = a.fraction_within >= th.min_fraction;
  const bool slope_ok = a.degenerate || (a.slope >= th.slope_lo && a.slope <= th.slope_hi && a.r2 >= th.min_r2);
  a.passed = fraction_ok && slope_ok;
}

IdentityReport verify_proposition1(const IdentityConfig& c) {
  const Vector direction = direction_for(c);
  const double rho = c.corrupt_rho_sign ? -c.model.rho : c.model.rho;
  return run_states(c, "psi", [&](const OuterState& s, int i, StateRecord& r) {
    if (c.dxu_source == DxuSource::Regression && c.model.rho_bar() > 0.0) {
      const ValueEstimate lhs = local_bsde_estimate(c, s, i, [&](const BsdeSolution& sol, const PathEnsemble& e) {
        return reconstruct_psi(sol, e, 0, nullptr, nullptr, c.corrupt_rho_sign).value.mean();
      });
      r.lhs = lhs.mean;
      r.lhs_se = lhs.std_error;
    } else {
      const ValueEstimate z2 = local_bsde_estimate(
          c, s, i, [](const BsdeSolution& sol, const PathEnsemble&) { return sol.Z2.col(0).mean(); });
      const double vol = chi(s.curve.values[0]);
      const DerivativeEstimate d = dx_u(c.model, c.grid, c.t_index, s.curve, s.x, c.payoff, c.bump, c.inner_paths,
                                        stream_seed(c.seed, kLhs, static_cast<std::uint64_t>(i), 1u << 20));
      r.lhs = z2.mean - rho * vol * d.value;
      r.lhs_se = std::hypot(z2.std_error, rho * vol * d.std_error);
    }
    const DerivativeEstimate g = gateaux_omega_u(c.model, c.grid, c.t_index, s.curve, s.x, c.payoff, direction,
                                                 c.bump, c.inner_paths,
                                                 stream_seed(c.seed, kRhs, static_cast<std::uint64_t>(i)),
                                                 c.rhs_estimator);
    r.rhs = g.value;
    r.rhs_se = g.std_error;
  });
}

IdentityReport verify_z1(const IdentityConfig& c) {
  const double rho_bar = c.model.rho_bar();
  return run_states(c, "z1", [&](const OuterState& s, int i, StateRecord& r) {
    const ValueEstimate z1 = local_bsde_estimate(
        c, s, i, [](const BsdeSolution& sol, const PathEnsemble&) { return sol.Z1.col(0).mean(); });
    r.lhs = z1.mean;
    r.lhs_se = z1.std_error;
    const double vol = chi(s.curve.values[0]);
    if (rho_bar * vol == 0.0) {
      r.rhs = 0.0;
      r.rhs_se = 0.0;
      return;
    }
    const DerivativeEstimate d = dx_u(c.model, c.grid, c.t_index, s.curve, s.x, c.payoff, c.bump, c.inner_paths,
                                      stream_seed(c.seed, kRhs, static_cast<std::uint64_t>(i)), c.rhs_estimator);
    r.rhs = rho_bar * vol * d.value;
    r.rhs_se = rho_bar * vol * d.std_error;
  });
}

MartingaleReport verify_martingale(const IdentityConfig& c, double z_scale) {
  const PathEnsemble e = simulate_joint(c.model, c.grid, c.inner_paths, stream_seed(c.seed, kMartingale, 0));
  BsdeSolution sol = solve_bsde(e, c.payoff, Driver::zero(), c.basis, c.bsde);
  sol.Z1 *= z_scale;
  sol.Z2 *= z_scale;
  MartingaleReport report;
  report.steps = martingale_residual(sol, e, c.thresholds.flag_sigma);
  for (const auto& s : report.steps) report.flagged += s.flagged;
  report.passed = report.flagged == 0;
  return report;
}

}  // namespace vfbl
