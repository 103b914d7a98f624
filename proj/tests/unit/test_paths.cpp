#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vfbl/paths.hpp"

using namespace vfbl;

namespace {

ModelParams rough(double h, double rho = -0.7) {
  ModelParams p;
  p.rho = rho;
  p.x0 = std::log(100.0);
  p.v0 = 0.04;
  p.kernel = Kernel::riemann_liouville(h, 1.0);
  return p;
}

}  // namespace

TEST_CASE("time grid invariants") {
  const TimeGrid g = TimeGrid::uniform(2.0, 8);
  CHECK(g.n_steps() == 8);
  CHECK(g.horizon() == 2.0);
  CHECK(g.dt(3) == doctest::Approx(0.25));
  CHECK_THROWS_AS(TimeGrid::uniform(1.0, 0), DomainError);
  CHECK_THROWS_AS(TimeGrid::uniform(0.0, 4), DomainError);
  CHECK_THROWS_AS(TimeGrid({0.0, 0.5, 0.5, 1.0}), DomainError);
  CHECK_THROWS_AS(TimeGrid({0.1, 0.5}), DomainError);
}

TEST_CASE("model parameter validation") {
  ModelParams p = rough(0.3);
  CHECK_NOTHROW(p.validate());
  p.rho = 1.5;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = rough(0.3);
  p.v0 = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  CHECK(rough(0.3, 0.6).rho_bar() == doctest::Approx(0.8));
}

TEST_CASE("initial curve interpolates the omega table") {
  ModelParams p = rough(0.3);
  p.omega_table = {{0.0, 0.02}, {1.0, 0.06}};
  const ForwardCurve c = initial_curve(p, TimeGrid::uniform(1.0, 4));
  CHECK(c.values[2] == doctest::Approx(0.04));
  CHECK(c.at(4) == doctest::Approx(0.06));
  CHECK_THROWS_AS(c.at(5), IndexError);
}

TEST_CASE("covariance factorization reproduces the covariance") {
  for (double h : {0.1, 0.3, 0.5}) {
    const TimeGrid g = TimeGrid::uniform(1.0, 64);
    const VolterraFactor f = factorize_volterra(Kernel::riemann_liouville(h), g);
    CHECK(f.residual <= 1e-8);
    CHECK(f.covariance(10, 40) == doctest::Approx(oracle::rl_covariance(h, 1.0, g[11], g[41])).epsilon(1e-8));
  }
  // For H = 1/2 the discrete kernel is the kernel itself.
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  const VolterraFactor bm = factorize_volterra(Kernel::riemann_liouville(0.5, 0.3), g);
  for (int j = 1; j <= 8; ++j)
    for (int k = 0; k < j; ++k) CHECK(bm.discrete_kernel(j, k) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(volterra_factor(Kernel::riemann_liouville(0.3), g) == volterra_factor(Kernel::riemann_liouville(0.3), g));
}

TEST_CASE("simulated variance has the Volterra marginals") {
  const TimeGrid g = TimeGrid::uniform(1.0, 16);
  const ModelParams p = rough(0.3);
  const VarianceDraws d = simulate_volterra_variance(p, g, 40000, 5);
  CHECK((d.V.col(0).array() == 0.04).all());
  for (int node : {4, 16}) {
    const Vector dev = d.V.col(node).array() - 0.04;
    const double var = dev.squaredNorm() / dev.size();
    const double expected = std::pow(g[node], 0.6);
    CHECK(std::abs(var - expected) < 4.0 * expected * std::sqrt(2.0 / dev.size()));
  }
}

TEST_CASE("simulation is reproducible and path streams are independent of the batch size") {
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  const ModelParams p = rough(0.3);
  const PathEnsemble a = simulate_joint(p, g, 50, 11);
  const PathEnsemble b = simulate_joint(p, g, 50, 11);
  const PathEnsemble c = simulate_joint(p, g, 20, 11);
  CHECK(a.V == b.V);
  CHECK(a.X == b.X);
  CHECK(a.V.topRows(20) == c.V);
  CHECK(a.dB.topRows(20) == c.dB);
  CHECK_FALSE(simulate_joint(p, g, 50, 12).V == a.V);
  CHECK_THROWS_AS(simulate_joint(p, g, 0, 1), DomainError);
}

TEST_CASE("zero kernel and rho = +-1 degenerate cases") {
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  ModelParams p = rough(0.3, 1.0);
  p.kernel = Kernel::zero();
  const PathEnsemble e = simulate_joint(p, g, 10, 3);
  CHECK((e.V.array() == 0.04).all());
  // With rho = 1 the log-price is driven by W alone.
  const Vector expected = std::log(100.0) - 0.5 * 0.04 + 0.2 * e.dW.rowwise().sum().array();
  CHECK((e.X.col(8) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("concatenation reproduces the original paths") {
  for (int n : {8, 32, 64}) {
    const TimeGrid g = TimeGrid::uniform(1.0, n);
    const ModelParams p = rough(0.1);
    const PathEnsemble full = simulate_joint(p, g, 40, 21);
    for (int t : {0, n / 4, n / 2, n - 1}) {
      for (int path : {0, 17, 39}) {
        const ForwardCurve curve = theta_curve(full, path, t);
        const Matrix dW = full.dW.row(path).tail(n - t);
        const Matrix dB = full.dB.row(path).tail(n - t);
        const PathEnsemble re = conditional_forward_with_increments(p, g, t, curve, full.X(path, t), dW, dB);
        CHECK((re.V.row(0) - full.V.row(path).tail(n - t + 1)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((re.X.row(0) - full.X.row(path).tail(n - t + 1)).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("theta curve is the conditional mean of future variance") {
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  const ModelParams p = rough(0.3);
  const PathEnsemble e = simulate_joint(p, g, 1, 4);
  const ForwardCurve curve = theta_curve(e, 0, 4);
  CHECK(curve.anchor == 4);
  CHECK(curve.values[0] == doctest::Approx(e.V(0, 4)).epsilon(1e-14));
  const PathEnsemble cond = conditional_forward(p, g, 4, curve, e.X(0, 4), 40000, 9);
  const double mean = cond.V.col(4).mean();
  const double sd = std::sqrt((cond.V.col(4).array() - mean).square().mean());
  CHECK(std::abs(mean - curve.values[4]) < 4.0 * sd / std::sqrt(40000.0));
  CHECK_THROWS_AS(theta_curve(e, 1, 4), IndexError);
  CHECK_THROWS_AS(theta_curve(e, 0, 9), IndexError);
  ForwardCurve wrong = curve;
  wrong.anchor = 3;
  CHECK_THROWS_AS(conditional_forward(p, g, 4, wrong, 0.0, 10, 1), IndexError);
}
