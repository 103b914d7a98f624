#include "vfbl/bsde.hpp"

#include <cmath>
#include <sstream>

#include "vfbl/regression.hpp"

namespace vfbl {

void Driver::validate() const {
  if (kind == DriverKind::Custom) {
    if (!custom) throw LipschitzViolation("custom driver has no function");
    if (!lipschitz || !(*lipschitz >= 0.0) || !std::isfinite(*lipschitz))
      throw LipschitzViolation("custom driver must declare a finite Lipschitz bound");
  }
}

double Driver::operator()(double t, double spot, double y, double z1, double z2) const {
  switch (kind) {
    case DriverKind::Zero: return 0.0;
    case DriverKind::LinearDiscount: return -rate * y;
    case DriverKind::Custom: return custom(t, spot, y, z1, z2);
  }
  return 0.0;
}

std::string BasisSpec::describe() const {
  std::ostringstream os;
  os << "poly" << degree << "(";
  const char* sep = "";
  if (use_x) { os << sep << "X"; sep = ","; }
  if (use_v) { os << sep << "V"; sep = ","; }
  if (use_int_v) { os << sep << "intV"; sep = ","; }
  if (use_forward_variance) { os << sep << "fwdVar"; sep = ","; }
  os << ")";
  if (intrinsic) os << "+intrinsic";
  if (bs_proxy) os << "+bsProxy";
  return os.str();
}

namespace {

struct RawFeatures {
  Matrix poly;    // enter through monomials
  Matrix linear;  // enter linearly
};

// E_k[int_{t_k}^T V ds] under the left-point rule, from the curve Theta^{t_k}.
Vector forward_variance(const PathEnsemble& e, int k) {
  const int m = e.n_local_steps();
  const auto& K = e.factor->discrete_kernel;
  double constant = 0.0;
  Vector coef = Vector::Zero(k);
  for (int s = k; s < m; ++s) {
    const double dt = e.dt(s);
    constant += dt * e.base_curve.values[s];
    for (int j = 0; j < k; ++j) coef[j] += dt * K(e.start + s, e.start + j);
  }
  Vector out = Vector::Constant(e.n_paths(), constant);
  if (k > 0) out.noalias() += e.dW.leftCols(k) * coef;
  return out;
}

RawFeatures raw_features(const PathEnsemble& e, const Payoff& payoff, const BasisSpec& b, int k) {
  const int n = e.n_paths();
  std::vector<Vector> poly;
  std::vector<Vector> linear;
  if (b.use_x) poly.push_back(e.X.col(k));
  if (b.use_v) poly.push_back(e.V.col(k));
  if (b.use_int_v) {
    Vector acc = Vector::Zero(n);
    for (int j = 0; j < k; ++j)
      acc += e.V.col(j).unaryExpr([](double v) { return v > 0.0 ? v : 0.0; }) * e.dt(j);
    poly.push_back(acc);
  }
  Vector fwd;
  if (b.use_forward_variance || b.bs_proxy) fwd = forward_variance(e, k);
  if (b.use_forward_variance) poly.push_back(fwd);
  if (b.intrinsic) linear.push_back(e.X.col(k).unaryExpr([&](double x) { return payoff_eval(payoff, x); }));
  if (b.bs_proxy) {
    Vector proxy(n);
    for (int p = 0; p < n; ++p) {
      const double w = std::max(fwd[p], 0.0);
      proxy[p] = payoff_gaussian_expectation(payoff, e.X(p, k) - 0.5 * w, w);
    }
    linear.push_back(proxy);
  }
  RawFeatures out{Matrix(n, static_cast<Eigen::Index>(poly.size())),
                  Matrix(n, static_cast<Eigen::Index>(linear.size()))};
  for (std::size_t i = 0; i < poly.size(); ++i) out.poly.col(static_cast<Eigen::Index>(i)) = poly[i];
  for (std::size_t i = 0; i < linear.size(); ++i) out.linear.col(static_cast<Eigen::Index>(i)) = linear[i];
  return out;
}

// Standardizes columns and keeps those that are not constant or linearly dependent on the
// previously kept ones (Gram-Schmidt with one reorthogonalization pass).
std::vector<Vector> independent_columns(const Matrix& cols, std::vector<Vector>& basis_so_far) {
  std::vector<Vector> kept;
  const double n = static_cast<double>(cols.rows());
  const auto min_support = std::max<Eigen::Index>(20, cols.rows() / 200);
  for (Eigen::Index c = 0; c < cols.cols(); ++c) {
    const double mean = cols.col(c).mean();
    const Vector centered = cols.col(c).array() - mean;
    const double sd = std::sqrt(centered.squaredNorm() / n);
    if (!(sd > 1e-10 * (1.0 + std::abs(mean)))) continue;
    // Floored payoff features can be non-constant on only a handful of paths.
    const double lo = cols.col(c).minCoeff();
    const double hi = cols.col(c).maxCoeff();
    const auto support = std::min((cols.col(c).array() != lo).count(), (cols.col(c).array() != hi).count());
    if (support < min_support) continue;
    const Vector z = centered / sd;
    Vector r = z;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : basis_so_far) r -= q.dot(r) * q;
    const double norm2 = r.squaredNorm() / n;
    if (norm2 < 1e-9) continue;
    // A new direction carried by a handful of paths is an outlier artefact; multiplied by
    // the Brownian increments in the joint design it makes the normal matrix singular.
    const double participation = r.squaredNorm() * r.squaredNorm() / r.array().pow(4).sum();
    if (participation < min_support) continue;
    basis_so_far.push_back(r / std::sqrt(r.squaredNorm()));
    kept.push_back(z);
  }
  return kept;
}

void add_monomials(std::vector<Vector>& out, const std::vector<Vector>& vars, int degree, Vector current,
                   std::size_t first, int remaining) {
  for (std::size_t i = first; i < vars.size(); ++i) {
    Vector next = current.cwiseProduct(vars[i]);
    out.push_back(next);
    if (remaining > 1) add_monomials(out, vars, degree, next, i, remaining - 1);
  }
}

}  // namespace

Matrix regression_design(const PathEnsemble& e, const Payoff& payoff, const BasisSpec& b, int k) {
  const RawFeatures raw = raw_features(e, payoff, b, k);
  const Eigen::Index n = e.n_paths();
  const Vector ones = Vector::Ones(n);
  std::vector<Vector> ortho{ones / std::sqrt(static_cast<double>(n))};
  const std::vector<Vector> state = independent_columns(raw.poly, ortho);

  std::vector<Vector> candidates;
  if (b.degree > 0 && !state.empty()) add_monomials(candidates, state, b.degree, ones, 0, b.degree);
  Matrix all(n, static_cast<Eigen::Index>(candidates.size()) + raw.linear.cols());
  for (std::size_t i = 0; i < candidates.size(); ++i) all.col(static_cast<Eigen::Index>(i)) = candidates[i];
  all.rightCols(raw.linear.cols()) = raw.linear;

  // Products and payoff proxies can still be (nearly) dependent, e.g. a deep in-the-money
  // intrinsic value against the Black-Scholes proxy.
  ortho.assign(1, ones / std::sqrt(static_cast<double>(n)));
  const std::vector<Vector> columns = independent_columns(all, ortho);
  Matrix phi(n, static_cast<Eigen::Index>(columns.size()) + 1);
  phi.col(0) = ones;
  for (std::size_t i = 0; i < columns.size(); ++i) phi.col(static_cast<Eigen::Index>(i) + 1) = columns[i];
  return phi;
}

namespace {

double residual_std(const Vector& target, const Vector& fitted, Eigen::Index n_params) {
  const double dof = std::max<double>(1.0, static_cast<double>(target.size() - n_params));
  return std::sqrt((target - fitted).squaredNorm() / dof);
}

}  // namespace

Matrix state_features(const PathEnsemble& ensemble, const Payoff& payoff, const BasisSpec& basis, int step) {
  const RawFeatures raw = raw_features(ensemble, payoff, basis, step);
  Matrix out(raw.poly.rows(), raw.poly.cols() + raw.linear.cols());
  out << raw.poly, raw.linear;
  return out;
}

BsdeSolution solve_bsde(const PathEnsemble& e, const Payoff& payoff, const Driver& driver,
                        const BasisSpec& basis, const BsdeOptions& options) {
  driver.validate();
  payoff.validate();
  if (basis.degree < 0) throw DomainError("basis degree must be non-negative");
  const int n = e.n_paths();
  const int m = e.n_local_steps();
  const bool has_b = e.rho * e.rho < 1.0;

  BsdeSolution sol{e.grid, e.start, Matrix(n, m + 1), Matrix::Zero(n, m), Matrix::Zero(n, m),
                   Matrix::Zero(n, m), Matrix::Zero(n, m), driver, basis.describe(),
                   std::vector<double>(static_cast<std::size_t>(m)), std::vector<int>(static_cast<std::size_t>(m))};
  for (int p = 0; p < n; ++p) sol.Y(p, m) = payoff_eval(payoff, e.X(p, m));

  const auto driver_term = [&](int node_local, const Vector& y, const Vector& z1, const Vector& z2) {
    Vector f(n);
    const double t = e.grid[e.start + node_local];
    for (int p = 0; p < n; ++p) f[p] = driver(t, std::exp(e.X(p, node_local)), y[p], z1[p], z2[p]);
    return f;
  };

  for (int k = m - 1; k >= 0; --k) {
    const double dt = e.dt(k);
    const double sqdt = std::sqrt(dt);
    const Vector next = sol.Y.col(k + 1);
    Vector target = next;
    if (driver.kind != DriverKind::Zero) {
      const Vector z1 = k + 1 < m ? Vector(sol.Z1.col(k + 1)) : Vector::Zero(n);
      const Vector z2 = k + 1 < m ? Vector(sol.Z2.col(k + 1)) : Vector::Zero(n);
      target += dt * driver_term(k + 1, next, z1, z2);
    }
    try {
      const Matrix phi = regression_design(e, payoff, basis, k);
      const Eigen::Index p = phi.cols();
      sol.basis_sizes[static_cast<std::size_t>(k)] = static_cast<int>(p);
      const Vector xi_w = e.dW.col(k) / sqdt;
      const Vector xi_b = e.dB.col(k) / sqdt;

      if (options.z_estimator == ZEstimator::IncrementProjection) {
        const LeastSquares ls(phi, options.max_condition);
        sol.condition_numbers[static_cast<std::size_t>(k)] = ls.condition_number();
        Matrix rhs(n, 2);
        rhs << target, next;
        const Matrix beta = ls.solve(rhs);
        sol.Y.col(k) = phi * beta.col(0);
        const Vector centered = next - phi * beta.col(1);
        Matrix zt(n, 2);
        zt << centered.cwiseProduct(xi_w) / sqdt, centered.cwiseProduct(xi_b) / sqdt;
        const Matrix zbeta = ls.solve(zt);
        const Vector lev = ls.leverage_scale();
        const Vector z2 = phi * zbeta.col(0);
        sol.Z2.col(k) = z2;
        sol.Z2_se.col(k) = lev * residual_std(zt.col(0), z2, p);
        if (has_b) {
          const Vector z1 = phi * zbeta.col(1);
          sol.Z1.col(k) = z1;
          sol.Z1_se.col(k) = lev * residual_std(zt.col(1), z1, p);
        }
      } else {
        const Eigen::Index blocks = has_b ? 3 : 2;
        Matrix joint(n, blocks * p);
        joint.leftCols(p) = phi;
        joint.middleCols(p, p) = phi.array().colwise() * xi_w.array();
        if (has_b) joint.rightCols(p) = phi.array().colwise() * xi_b.array();
        const LeastSquares ls(joint, options.max_condition);
        sol.condition_numbers[static_cast<std::size_t>(k)] = ls.condition_number();
        const Vector beta = ls.solve(target);
        const Vector fitted = joint * beta;
        const double sigma = residual_std(target, fitted, joint.cols());
        sol.Y.col(k) = phi * beta.head(p);
        sol.Z2.col(k) = phi * beta.segment(p, p) / sqdt;
        // Covariance of the Z blocks: sigma^2 (J^T J)^{-1}.
        const Matrix cov = ls.inverse();
        const Matrix cw = cov.block(p, p, p, p);
        sol.Z2_se.col(k) = ((phi * cw).cwiseProduct(phi)).rowwise().sum().cwiseMax(0.0).cwiseSqrt() * sigma / sqdt;
        if (has_b) {
          sol.Z1.col(k) = phi * beta.segment(2 * p, p) / sqdt;
          const Matrix cb = cov.block(2 * p, 2 * p, p, p);
          sol.Z1_se.col(k) = ((phi * cb).cwiseProduct(phi)).rowwise().sum().cwiseMax(0.0).cwiseSqrt() * sigma / sqdt;
        }
      }

      for (int it = 0; it < options.picard_iterations && driver.kind != DriverKind::Zero; ++it) {
        const Vector refined = next + dt * driver_term(k, sol.Y.col(k), sol.Z1.col(k), sol.Z2.col(k));
        const LeastSquares ls(phi, options.max_condition);
        sol.Y.col(k) = phi * ls.solve(refined);
      }
    } catch (const SingularRegression& err) {
      std::string what = err.what();
      const std::string prefix = "SingularRegression: ";
      if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
      throw SingularRegression(what + " at step " + std::to_string(e.start + k) + " with basis " + basis.describe());
    }
  }
  return sol;
}

std::vector<StepResidual> martingale_residual(const BsdeSolution& s, const PathEnsemble& e, double flag_sigma) {
  const int m = s.n_steps();
  const int n = static_cast<int>(s.Y.rows());
  std::vector<StepResidual> out;
  out.reserve(static_cast<std::size_t>(m));
  const auto moment = [n](const Vector& v, double& mean, double& se) {
    const ValueEstimate est = summarize(v);
    mean = est.mean;
    se = n > 1 ? est.std_error : 0.0;
  };
  for (int k = 0; k < m; ++k) {
    const double dt = e.dt(k);
    Vector r = s.Y.col(k + 1) - s.Y.col(k) - s.Z1.col(k).cwiseProduct(e.dB.col(k)) -
               s.Z2.col(k).cwiseProduct(e.dW.col(k));
    if (s.driver.kind != DriverKind::Zero) {
      const double t = e.grid[e.start + k + 1];
      for (int p = 0; p < n; ++p) {
        const double z1 = k + 1 < m ? s.Z1(p, k + 1) : 0.0;
        const double z2 = k + 1 < m ? s.Z2(p, k + 1) : 0.0;
        r[p] += dt * s.driver(t, std::exp(e.X(p, k + 1)), s.Y(p, k + 1), z1, z2);
      }
    }
    StepResidual res;
    res.step = k;
    moment(r, res.mean, res.std_error);
    moment(r.cwiseProduct(e.dW.col(k)) / dt, res.w_moment, res.w_std_error);
    moment(r.cwiseProduct(e.dB.col(k)) / dt, res.b_moment, res.b_std_error);
    const double floor = 1e-12 * (1.0 + s.Y.col(k + 1).cwiseAbs().mean());
    const auto exceeds = [&](double mean, double se) {
      return std::abs(mean) > flag_sigma * se && std::abs(mean) > floor;
    };
    res.flagged = exceeds(res.mean, res.std_error) || exceeds(res.w_moment, res.w_std_error) ||
                  exceeds(res.b_moment, res.b_std_error);
    out.push_back(res);
  }
  return out;
}

}  // namespace vfbl
