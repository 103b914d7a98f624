#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vfbl/valuation.hpp"

using namespace vfbl;

namespace {

ModelParams flat(double rho = -0.7) {
  ModelParams p;
  p.rho = rho;
  p.x0 = std::log(100.0);
  p.v0 = 0.04;
  p.kernel = Kernel::zero();
  return p;
}

}  // namespace

TEST_CASE("payoff evaluation") {
  const double x = std::log(110.0);
  CHECK(payoff_eval(Payoff{PayoffKind::Call, 100.0, 2.0}, x) == doctest::Approx(20.0));
  CHECK(payoff_eval(Payoff{PayoffKind::Put, 100.0, 1.0}, x) == 0.0);
  CHECK(payoff_eval(Payoff{PayoffKind::Digital, 100.0, 1.0}, x) == 1.0);
  CHECK(payoff_eval(Payoff{PayoffKind::Identity, 0.0, 1.0}, x) == doctest::Approx(110.0));
  CHECK_THROWS_AS(Payoff({PayoffKind::Call, -1.0, 1.0}).validate(), DomainError);
  CHECK(payoff_kind_from_string(to_string(PayoffKind::Digital)) == PayoffKind::Digital);
  CHECK_THROWS_AS(payoff_kind_from_string("barrier"), ConfigError);
}

TEST_CASE("Gaussian payoff expectation matches the Black-Scholes oracle") {
  const oracle::BlackScholes bs{100.0, 95.0, 0.25, 1.5};
  const double w = 0.25 * 0.25 * 1.5;
  const double mean = std::log(100.0) - 0.5 * w;
  CHECK(payoff_gaussian_expectation({PayoffKind::Call, 95.0, 1.0}, mean, w) == doctest::Approx(bs.call()).epsilon(1e-12));
  CHECK(payoff_gaussian_expectation({PayoffKind::Put, 95.0, 1.0}, mean, w) == doctest::Approx(bs.put()).epsilon(1e-12));
  CHECK(payoff_gaussian_expectation({PayoffKind::Digital, 95.0, 1.0}, mean, w) ==
        doctest::Approx(bs.digital()).epsilon(1e-12));
  CHECK(bs.call() == doctest::Approx(oracle::call_by_integration(bs)).epsilon(1e-9));
}

TEST_CASE("zero kernel price reduces to Black-Scholes") {
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  const ModelParams p = flat();
  const double expected = oracle::BlackScholes{100.0, 100.0, 0.2, 1.0}.call();
  CHECK(expected == doctest::Approx(7.9656).epsilon(1e-4));
  const ValueEstimate v = price(p, g, 0, initial_curve(p, g), p.x0, Payoff{}, 50000, 1);
  CHECK(std::abs(v.mean - expected) < 3.0 * v.std_error);
  CHECK(v.n_paths == 50000);
  // Conditioning on W leaves a Black-Scholes price with variance rho_bar^2 v T on every path.
  const ValueEstimate m = price(p, g, 0, initial_curve(p, g), p.x0, Payoff{}, 50000, 1, Estimator::Mixing);
  CHECK(std::abs(m.mean - expected) < 3.0 * m.std_error);
  CHECK(m.std_error < v.std_error);
}

TEST_CASE("identity payoff is a martingale in the rough model") {
  ModelParams p = flat(-0.7);
  p.kernel = Kernel::riemann_liouville(0.3, 0.02);
  const TimeGrid g = TimeGrid::uniform(1.0, 16);
  const ValueEstimate v = price(p, g, 0, initial_curve(p, g), p.x0, Payoff{PayoffKind::Identity, 0.0, 1.0}, 40000, 3);
  CHECK(std::abs(v.mean - 100.0) < 4.0 * v.std_error);
}

TEST_CASE("summarize") {
  Vector s(4);
  s << 1.0, 2.0, 3.0, 4.0;
  const ValueEstimate e = summarize(s);
  CHECK(e.mean == 2.5);
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(summarize(Vector()).n_paths == 0);
}

TEST_CASE("prices are reproducible under a fixed seed") {
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  const ModelParams p = flat();
  const auto a = price(p, g, 0, initial_curve(p, g), p.x0, Payoff{}, 1000, 42);
  const auto b = price(p, g, 0, initial_curve(p, g), p.x0, Payoff{}, 1000, 42);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}
