#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vfbl/kernel.hpp"
#include "vfbl/quadrature.hpp"

using namespace vfbl;

TEST_CASE("Riemann-Liouville kernel values") {
  const Kernel k = Kernel::riemann_liouville(0.3, 1.0);
  CHECK(eval_kernel(k, 1.0, 0.0) == doctest::Approx(std::sqrt(0.6)).epsilon(1e-14));
  CHECK(eval_kernel(k, 0.75, 0.5) == doctest::Approx(std::sqrt(0.6) * std::pow(0.25, -0.2)).epsilon(1e-14));
  CHECK_THROWS_AS(eval_kernel(k, 0.5, 0.5), DiagonalSingularity);
  CHECK_THROWS_AS(eval_kernel(k, 0.5, 0.6), DomainError);

  const Kernel bm = Kernel::riemann_liouville(0.5, 2.0);
  CHECK(eval_kernel(bm, 0.3, 0.3) == doctest::Approx(2.0));
  CHECK(eval_kernel(Kernel::riemann_liouville(0.7), 0.3, 0.3) == 0.0);
}

TEST_CASE("kernel factories validate their parameters") {
  CHECK_THROWS_AS(Kernel::riemann_liouville(0.0), DomainError);
  CHECK_THROWS_AS(Kernel::riemann_liouville(1.0), DomainError);
  CHECK_THROWS_AS(Kernel::riemann_liouville(0.3, -1.0), DomainError);
  CHECK_THROWS_AS(Kernel::constant(0.0), DomainError);
  CHECK(eval_kernel(Kernel::zero(), 1.0, 0.0) == 0.0);
  CHECK(eval_kernel(Kernel::constant(0.4), 2.0, 0.5) == 0.4);
}

TEST_CASE("shifted kernel is K(s - t)") {
  const Kernel k = Kernel::riemann_liouville(0.1, 0.5);
  const auto kt = shifted_kernel(k, 0.25);
  CHECK(kt(0.75) == doctest::Approx(eval_kernel_lag(k, 0.5)));
  CHECK_THROWS_AS(kt(0.25), DiagonalSingularity);
  CHECK_THROWS_AS(kt(0.2), DomainError);
}

TEST_CASE("diagonal autocovariance is scale^2 t^{2H}") {
  for (double h : {0.1, 0.3, 0.5, 0.7}) {
    const Kernel k = Kernel::riemann_liouville(h, 0.3);
    for (double t : {0.25, 1.0, 2.0}) {
      const double expected = 0.09 * std::pow(t, 2.0 * h);
      CHECK(kernel_autocovariance(k, t, t) == doctest::Approx(expected).epsilon(1e-13));
      CHECK(kernel_autocovariance_quadrature(k, t, t) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("off-diagonal autocovariance matches the hypergeometric oracle") {
  for (double h : {0.1, 0.3, 0.7}) {
    const Kernel k = Kernel::riemann_liouville(h, 1.0);
    for (auto [s, t] : {std::pair{0.25, 1.0}, std::pair{0.5, 0.75}, std::pair{0.1, 0.9}, std::pair{1.0, 0.3}}) {
      const double expected = oracle::rl_covariance(h, 1.0, s, t);
      CHECK(kernel_autocovariance(k, s, t) == doctest::Approx(expected).epsilon(1e-9));
      CHECK(kernel_autocovariance(k, s, t) == doctest::Approx(kernel_autocovariance(k, t, s)).epsilon(1e-14));
    }
  }
  CHECK(kernel_autocovariance(Kernel::riemann_liouville(0.5, 2.0), 0.3, 0.8) == doctest::Approx(4.0 * 0.3));
  CHECK(kernel_autocovariance(Kernel::constant(0.5), 0.3, 0.8) == doctest::Approx(0.25 * 0.3));
  CHECK(kernel_autocovariance(Kernel::zero(), 0.3, 0.8) == 0.0);
  CHECK_THROWS_AS(kernel_autocovariance(Kernel::zero(), -0.1, 0.8), DomainError);
}

TEST_CASE("adaptive quadrature") {
  const auto r = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, M_PI);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-13));
  const auto sqrt_sing = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-8, 5000);
  CHECK(sqrt_sing.value == doctest::Approx(2.0).epsilon(1e-7));
  CHECK_THROWS_AS(integrate_adaptive([](double x) { return 1.0 / x; }, 0.0, 1.0, 1e-12, 50), QuadratureFailure);
}
