#include "vfbl/paths.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "vfbl/rng.hpp"

namespace vfbl {

TimeGrid TimeGrid::uniform(double horizon, int n_steps) {
  if (n_steps < 1) throw DomainError("grid needs at least one step");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("grid horizon must be positive");
  std::vector<double> nodes(static_cast<std::size_t>(n_steps) + 1);
  for (int i = 0; i <= n_steps; ++i) nodes[static_cast<std::size_t>(i)] = horizon * i / n_steps;
  nodes.back() = horizon;
  return TimeGrid(std::move(nodes));
}

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw DomainError("grid needs at least one step");
  if (nodes_.front() != 0.0) throw DomainError("grid must start at 0");
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (!(nodes_[i] > nodes_[i - 1])) throw DomainError("grid nodes must be strictly increasing");
}

void ModelParams::validate() const {
  if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("rho must lie in [-1, 1]");
  if (!(v0 > 0.0)) throw DomainError("v0 must be positive");
  if (!std::isfinite(x0)) throw DomainError("x0 must be finite");
  kernel.validate();
  for (std::size_t i = 1; i < omega_table.size(); ++i)
    if (!(omega_table[i].first > omega_table[i - 1].first))
      throw DomainError("omega table times must be strictly increasing");
}

double ForwardCurve::at(int node) const {
  if (node < anchor || node > last_node())
    throw IndexError("node " + std::to_string(node) + " outside curve [" + std::to_string(anchor) + ", " +
                     std::to_string(last_node()) + "]");
  return values[node - anchor];
}

ForwardCurve initial_curve(const ModelParams& params, const TimeGrid& grid) {
  ForwardCurve curve{0, Vector::Constant(grid.n_steps() + 1, params.v0)};
  const auto& table = params.omega_table;
  if (table.empty()) return curve;
  for (int i = 0; i <= grid.n_steps(); ++i) {
    const double s = grid[i];
    if (s <= table.front().first) {
      curve.values[i] = table.front().second;
    } else if (s >= table.back().first) {
      curve.values[i] = table.back().second;
    } else {
      auto hi = std::upper_bound(table.begin(), table.end(), s,
                                 [](double v, const auto& e) { return v < e.first; });
      auto lo = hi - 1;
      const double w = (s - lo->first) / (hi->first - lo->first);
      curve.values[i] = (1.0 - w) * lo->second + w * hi->second;
    }
  }
  return curve;
}

VolterraFactor factorize_volterra(const Kernel& kernel, const TimeGrid& grid) {
  kernel.validate();
  const int n = grid.n_steps();
  VolterraFactor f{kernel, grid, Matrix::Zero(n, n), Matrix::Zero(n, n), Matrix::Zero(n + 1, n), 0.0, 0.0};
  if (kernel.kind == KernelKind::Zero) return f;

  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      f.covariance(i, j) = f.covariance(j, i) = kernel_autocovariance(kernel, grid[i + 1], grid[j + 1]);

  bool ok = false;
  for (double jitter : {0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10}) {
    Eigen::LLT<Matrix> llt(f.covariance + jitter * Matrix::Identity(n, n));
    if (llt.info() != Eigen::Success) continue;
    f.lower = llt.matrixL();
    f.jitter = jitter;
    ok = true;
    break;
  }
  if (!ok) throw FactorizationFailure("covariance not positive semidefinite after jitter 1e-10");
  f.residual = (f.lower * f.lower.transpose() - f.covariance).cwiseAbs().maxCoeff();
  if (f.residual > 1e-8)
    throw FactorizationFailure("factorization residual " + std::to_string(f.residual) + " exceeds 1e-8");

  for (int j = 1; j <= n; ++j)
    for (int k = 0; k < j; ++k) f.discrete_kernel(j, k) = f.lower(j - 1, k) / std::sqrt(grid.dt(k));
  return f;
}

std::shared_ptr<const VolterraFactor> volterra_factor(const Kernel& kernel, const TimeGrid& grid) {
  using Key = std::tuple<int, double, double, std::vector<double>>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const VolterraFactor>> cache;
  Key key{static_cast<int>(kernel.kind), kernel.hurst, kernel.scale, grid.nodes()};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto factor = std::make_shared<const VolterraFactor>(factorize_volterra(kernel, grid));
  std::lock_guard lock(mutex);
  return cache.emplace(std::move(key), std::move(factor)).first->second;
}

namespace {

// Fills n_paths x m Gaussian increments; W first, then B, from each path's own stream.
void draw_increments(const TimeGrid& grid, int start, int n_paths, std::uint64_t seed, Matrix& dW,
                     Matrix* dB) {
  const int m = grid.n_steps() - start;
  dW.resize(n_paths, m);
  if (dB) dB->resize(n_paths, m);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < n_paths; ++p) {
    PathRng rng(seed, static_cast<std::uint64_t>(p));
    for (int k = 0; k < m; ++k) dW(p, k) = std::sqrt(grid.dt(start + k)) * rng.normal();
    if (dB)
      for (int k = 0; k < m; ++k) (*dB)(p, k) = std::sqrt(grid.dt(start + k)) * rng.normal();
  }
}

// V on nodes start..n from the anchor curve plus the discrete Volterra sum.
Matrix volterra_sum(const VolterraFactor& factor, int start, const ForwardCurve& curve, const Matrix& dW) {
  const int n = factor.grid.n_steps();
  const int m = n - start;
  Matrix V(dW.rows(), m + 1);
  if (m > 0) {
    V.noalias() = dW * factor.discrete_kernel.block(start, start, m + 1, m).transpose();
  } else {
    V.setZero();
  }
  V.rowwise() += curve.values.transpose();
  return V;
}

Matrix log_euler(const Matrix& V, const Matrix& dW, const Matrix& dB, const TimeGrid& grid, int start,
                 double x, double rho, double& truncation) {
  const double rho_bar = std::sqrt(1.0 - rho * rho);
  const Eigen::Index m = dW.cols();
  Matrix X(V.rows(), m + 1);
  X.col(0).setConstant(x);
  Eigen::Index negative = 0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double dt = grid.dt(start + static_cast<int>(k));
    const Vector vol = V.col(k).unaryExpr([](double v) { return chi(v); });
    negative += (V.col(k).array() < 0.0).count();
    X.col(k + 1) = X.col(k).array() - 0.5 * vol.array().square() * dt +
                   vol.array() * (rho * dW.col(k).array() + rho_bar * dB.col(k).array());
  }
  truncation = m > 0 && V.rows() > 0 ? static_cast<double>(negative) / (static_cast<double>(m) * V.rows()) : 0.0;
  return X;
}

}  // namespace

VarianceDraws simulate_volterra_variance(const ModelParams& params, const TimeGrid& grid, int n_paths,
                                         std::uint64_t seed) {
  params.validate();
  if (n_paths < 1) throw DomainError("n_paths must be at least 1");
  auto factor = volterra_factor(params.kernel, grid);
  VarianceDraws out;
  draw_increments(grid, 0, n_paths, seed, out.dW, nullptr);
  out.V = volterra_sum(*factor, 0, initial_curve(params, grid), out.dW);
  return out;
}

PathEnsemble simulate_joint(const ModelParams& params, const TimeGrid& grid, int n_paths, std::uint64_t seed) {
  params.validate();
  if (n_paths < 1) throw DomainError("n_paths must be at least 1");
  PathEnsemble e{grid, 0, {}, {}, {}, {}, seed, params.rho, initial_curve(params, grid),
                 volterra_factor(params.kernel, grid), 0.0};
  draw_increments(grid, 0, n_paths, seed, e.dW, &e.dB);
  e.V = volterra_sum(*e.factor, 0, e.base_curve, e.dW);
  e.X = log_euler(e.V, e.dW, e.dB, grid, 0, params.x0, params.rho, e.truncation_fraction);
  return e;
}

ForwardCurve theta_curve(const PathEnsemble& ensemble, int path, int t_local) {
  if (path < 0 || path >= ensemble.n_paths()) throw IndexError("path index " + std::to_string(path));
  const int m = ensemble.n_local_steps();
  if (t_local < 0 || t_local > m) throw IndexError("time index " + std::to_string(t_local));
  const int n = ensemble.grid.n_steps();
  const int anchor = ensemble.start + t_local;
  ForwardCurve curve{anchor, ensemble.base_curve.values.tail(n - anchor + 1)};
  if (t_local > 0) {
    const auto K = ensemble.factor->discrete_kernel.block(anchor, ensemble.start, n - anchor + 1, t_local);
    curve.values.noalias() += K * ensemble.dW.row(path).head(t_local).transpose();
  }
  return curve;
}

PathEnsemble conditional_forward_with_increments(const ModelParams& params, const TimeGrid& grid,
                                                 int t_index, const ForwardCurve& curve, double x,
                                                 const Matrix& dW, const Matrix& dB) {
  params.validate();
  const int n = grid.n_steps();
  if (t_index < 0 || t_index > n) throw IndexError("time index " + std::to_string(t_index));
  if (curve.anchor != t_index || curve.last_node() != n)
    throw IndexError("curve must be anchored at t_index and extend to the horizon");
  if (!std::isfinite(x)) throw DomainError("x must be finite");
  if (dW.cols() != n - t_index || dB.cols() != dW.cols() || dB.rows() != dW.rows())
    throw IndexError("increment matrices do not match the remaining grid");
  PathEnsemble e{grid, t_index, {}, {}, dW, dB, 0, params.rho, curve, volterra_factor(params.kernel, grid), 0.0};
  e.V = volterra_sum(*e.factor, t_index, curve, dW);
  e.X = log_euler(e.V, dW, dB, grid, t_index, x, params.rho, e.truncation_fraction);
  return e;
}

PathEnsemble conditional_forward(const ModelParams& params, const TimeGrid& grid, int t_index,
                                 const ForwardCurve& curve, double x, int n_paths, std::uint64_t seed) {
  if (n_paths < 1) throw DomainError("n_paths must be at least 1");
  if (t_index < 0 || t_index > grid.n_steps()) throw IndexError("time index " + std::to_string(t_index));
  Matrix dW, dB;
  draw_increments(grid, t_index, n_paths, seed, dW, &dB);
  PathEnsemble e = conditional_forward_with_increments(params, grid, t_index, curve, x, dW, dB);
  e.seed = seed;
  return e;
}

}  // namespace vfbl
