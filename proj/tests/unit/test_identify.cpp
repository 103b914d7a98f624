#include <doctest.h>

#include <cmath>
#include <limits>

#include "vfbl/identify.hpp"

using namespace vfbl;

namespace {

IdentityConfig small_config() {
  IdentityConfig c = default_identity_config();
  c.n_states = 5;
  c.inner_paths = 10000;
  return c;
}

StateRecord record(double lhs, double rhs, double se = 0.1) {
  StateRecord r;
  r.lhs = lhs;
  r.rhs = rhs;
  r.lhs_se = r.rhs_se = se;
  r.z = z_score(lhs, se, rhs, se);
  return r;
}

}  // namespace

TEST_CASE("default configuration") {
  const IdentityConfig c = default_identity_config();
  CHECK(c.model.rho == -0.7);
  CHECK(c.model.kernel.hurst == 0.3);
  CHECK(c.grid.n_steps() == 32);
  CHECK(c.t_index == 16);
  CHECK(c.n_states == 20);
  CHECK(c.inner_paths == 100000);
  CHECK(c.payoff.kind == PayoffKind::Call);
  CHECK(c.payoff.strike == doctest::Approx(std::exp(c.model.x0)));
}

TEST_CASE("z-score") {
  CHECK(z_score(1.0, 0.3, 0.5, 0.4) == doctest::Approx(1.0));
  CHECK(z_score(2.0, 0.0, 2.0, 0.0) == 0.0);
  CHECK(std::isfinite(z_score(2.0, 0.0, 1.0, 0.0)));
  CHECK(z_score(2.0, 0.0, 1.0, 0.0) > 1e300);
}

TEST_CASE("aggregate report") {
  const IdentityThresholds th;
  IdentityReport good;
  for (int i = 0; i < 10; ++i) good.records.push_back(record(1.0 + 0.1 * i + 0.01 * (i % 2), 1.0 + 0.1 * i));
  aggregate_report(good, th);
  CHECK(good.aggregate.fraction_within == 1.0);
  CHECK(good.aggregate.slope == doctest::Approx(1.0).epsilon(0.05));
  CHECK(good.aggregate.r2 > 0.99);
  CHECK(good.aggregate.passed);

  IdentityReport flipped = good;
  for (auto& r : flipped.records) {
    r.lhs = 2.0 - r.rhs;
    r.z = z_score(r.lhs, r.lhs_se, r.rhs, r.rhs_se);
  }
  aggregate_report(flipped, th);
  CHECK(flipped.aggregate.slope == doctest::Approx(-1.0));
  CHECK_FALSE(flipped.aggregate.passed);

  IdentityReport with_error = good;
  with_error.records[0].error = "SingularRegression";
  with_error.records[1].error = "SingularRegression";
  aggregate_report(with_error, th);
  CHECK(with_error.aggregate.fraction_within == doctest::Approx(0.8));
  CHECK_FALSE(with_error.aggregate.passed);

  IdentityReport flat;
  for (int i = 0; i < 5; ++i) flat.records.push_back(record(0.01 * (i % 2), 0.0));
  aggregate_report(flat, th);
  CHECK(flat.aggregate.degenerate);
  CHECK(flat.aggregate.passed);
}

TEST_CASE("psi reconstruction") {
  ModelParams p;
  p.rho = 0.0;
  p.x0 = std::log(100.0);
  p.kernel = Kernel::riemann_liouville(0.3, 0.02);
  const TimeGrid g = TimeGrid::uniform(1.0, 4);
  const PathEnsemble e = simulate_joint(p, g, 3000, 1);
  const BsdeSolution s = solve_bsde(e, Payoff{}, Driver::zero(), BasisSpec{});
  const PsiEstimates psi = reconstruct_psi(s, e, 2);
  CHECK(psi.value == s.Z2.col(2));

  p.rho = -0.6;
  const PathEnsemble e2 = simulate_joint(p, g, 3000, 1);
  const BsdeSolution s2 = solve_bsde(e2, Payoff{}, Driver::zero(), BasisSpec{});
  const Vector dxu = Vector::Constant(3000, 50.0);
  const PsiEstimates with_dxu = reconstruct_psi(s2, e2, 2, &dxu);
  const int path = 7;
  CHECK(with_dxu.value[path] == doctest::Approx(s2.Z2(path, 2) + 0.6 * chi(e2.V(path, 2)) * 50.0));
  const PsiEstimates proxy = reconstruct_psi(s2, e2, 2);
  CHECK(proxy.value[path] == doctest::Approx(s2.Z2(path, 2) + 0.75 * s2.Z1(path, 2)));
  const PsiEstimates flipped = reconstruct_psi(s2, e2, 2, nullptr, nullptr, true);
  CHECK(flipped.value[path] == doctest::Approx(s2.Z2(path, 2) - 0.75 * s2.Z1(path, 2)));
  CHECK_THROWS_AS(reconstruct_psi(s2, e2, 4), IndexError);
  CHECK_THROWS_AS(reconstruct_psi(s, e2.grid == e.grid ? simulate_joint(p, g, 10, 1) : e2, 1), DomainError);

  p.rho = 1.0;
  const PathEnsemble e3 = simulate_joint(p, g, 2000, 1);
  const BsdeSolution s3 = solve_bsde(e3, Payoff{}, Driver::zero(), BasisSpec{});
  CHECK_THROWS_AS(reconstruct_psi(s3, e3, 1), DomainError);
}

TEST_CASE("zero kernel: psi vanishes and the report is a degenerate pass") {
  IdentityConfig c = small_config();
  c.model.kernel = Kernel::zero();
  c.inner_paths = 100000;  // the regression proxy is biased on small batches
  const IdentityReport r = verify_proposition1(c);
  CHECK(r.records.size() == 5);
  for (const auto& s : r.records) {
    CHECK_FALSE(s.error);
    CHECK(s.rhs == 0.0);
    CHECK(std::abs(s.lhs) <= 3.0 * s.lhs_se);
  }
  CHECK(r.aggregate.degenerate);
  CHECK(r.aggregate.passed);
}

TEST_CASE("Z1 identity at rho = -1 is trivially satisfied") {
  IdentityConfig c = small_config();
  c.model.rho = -1.0;
  c.inner_paths = 2000;
  const IdentityReport r = verify_z1(c);
  for (const auto& s : r.records) {
    CHECK(s.lhs == 0.0);
    CHECK(s.rhs == 0.0);
    CHECK(s.z == 0.0);
  }
  CHECK(r.aggregate.passed);
}

TEST_CASE("zero kernel Z1 identity against the Black-Scholes delta") {
  IdentityConfig c = small_config();
  c.model.kernel = Kernel::zero();
  const IdentityReport r = verify_z1(c);
  for (const auto& s : r.records) {
    CHECK_FALSE(s.error);
    CHECK(std::abs(s.z) <= 3.0);
  }
}

TEST_CASE("rough model: small run of the psi identity and its negative control") {
  IdentityConfig c = small_config();
  c.inner_paths = 20000;
  const IdentityReport r = verify_proposition1(c);
  int within = 0;
  for (const auto& s : r.records) {
    CHECK_FALSE(s.error);
    within += std::abs(s.z) <= 3.0;
  }
  CHECK(within >= 4);
  c.corrupt_rho_sign = true;
  const IdentityReport bad = verify_proposition1(c);
  CHECK_FALSE(bad.aggregate.passed);
}

TEST_CASE("doubling the notional doubles both sides") {
  IdentityConfig c = small_config();
  c.n_states = 2;
  c.inner_paths = 4000;
  const IdentityReport a = verify_proposition1(c);
  c.payoff.notional = 2.0;
  const IdentityReport b = verify_proposition1(c);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(b.records[i].lhs == doctest::Approx(2.0 * a.records[i].lhs).epsilon(1e-8));
    CHECK(b.records[i].rhs == doctest::Approx(2.0 * a.records[i].rhs).epsilon(1e-8));
    CHECK(b.records[i].z == doctest::Approx(a.records[i].z).epsilon(1e-6));
  }
}

TEST_CASE("martingale check and its negative control") {
  IdentityConfig c = small_config();
  c.inner_paths = 20000;
  const MartingaleReport ok = verify_martingale(c);
  CHECK(ok.steps.size() == 32);
  CHECK(ok.passed);
  const MartingaleReport bad = verify_martingale(c, 2.0);
  CHECK(bad.flagged >= 1);
  CHECK_FALSE(bad.passed);
}

TEST_CASE("invalid identity configurations") {
  IdentityConfig c = small_config();
  c.t_index = 32;
  CHECK_THROWS_AS(verify_proposition1(c), IndexError);
  c = small_config();
  c.n_states = 0;
  CHECK_THROWS_AS(verify_z1(c), DomainError);
}
