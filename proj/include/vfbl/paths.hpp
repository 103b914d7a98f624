#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "vfbl/kernel.hpp"

namespace vfbl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Discretization t_0 = 0 < t_1 < ... < t_n = T.
class TimeGrid {
 public:
  static TimeGrid uniform(double horizon, int n_steps);
  /// Throws DomainError unless nodes start at 0 and are strictly increasing.
  explicit TimeGrid(std::vector<double> nodes);

  int n_steps() const { return static_cast<int>(nodes_.size()) - 1; }
  double horizon() const { return nodes_.back(); }
  double operator[](int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  double dt(int k) const { return (*this)[k + 1] - (*this)[k]; }
  const std::vector<double>& nodes() const { return nodes_; }
  bool operator==(const TimeGrid& o) const { return nodes_ == o.nodes_; }

 private:
  std::vector<double> nodes_;
};

enum class Chi { SqrtPositivePart };

/// chi(v) = sqrt(max(v, 0)).
inline double chi(double v) { return v > 0.0 ? std::sqrt(v) : 0.0; }

struct ModelParams {
  double rho = 0.0;
  double x0 = 0.0;
  double v0 = 0.04;
  Kernel kernel = Kernel::zero();
  Chi chi_kind = Chi::SqrtPositivePart;
  /// Optional tabulated initial curve (time, value), linearly interpolated; empty means omega = v0.
  std::vector<std::pair<double, double>> omega_table;

  double rho_bar() const { return std::sqrt(1.0 - rho * rho); }
  void validate() const;
};

/// The curve s -> Theta^t_s on the grid nodes s >= t.
struct ForwardCurve {
  int anchor = 0;
  Vector values;  // values[i] is the curve at node anchor + i

  double at(int node) const;
  int last_node() const { return anchor + static_cast<int>(values.size()) - 1; }
};

ForwardCurve initial_curve(const ModelParams& params, const TimeGrid& grid);

/// Lower-triangular factor of the exact covariance of V on the grid, rewritten as a
/// discrete kernel acting on Brownian increments:
///   V_{t_j} - omega_{t_j} = sum_{k<j} kernel(j, k) dW_k,   dW_k ~ N(0, dt_k) i.i.d.
/// For H = 1/2 the discrete kernel coincides with K itself.
struct VolterraFactor {
  Kernel kernel;
  TimeGrid grid;
  Matrix covariance;       // n x n, nodes 1..n
  Matrix lower;            // Cholesky factor of covariance
  Matrix discrete_kernel;  // (n+1) x n, row = node, column = increment
  double jitter = 0.0;
  double residual = 0.0;   // max |L L^T - covariance|
};

/// Builds the factor, or throws FactorizationFailure.
VolterraFactor factorize_volterra(const Kernel& kernel, const TimeGrid& grid);

/// Cached, shared read-only factor for (kernel, grid).
std::shared_ptr<const VolterraFactor> volterra_factor(const Kernel& kernel, const TimeGrid& grid);

/// Simulated (V, X, W, B) on the nodes start..n of a grid.
struct PathEnsemble {
  TimeGrid grid;
  int start = 0;  // first node covered; 0 for unconditional ensembles
  Matrix V;       // n_paths x (m+1), m = n - start
  Matrix X;
  Matrix dW;      // n_paths x m
  Matrix dB;
  std::uint64_t seed = 0;
  double rho = 0.0;
  ForwardCurve base_curve;  // curve the ensemble was started from (omega for start = 0)
  std::shared_ptr<const VolterraFactor> factor;
  double truncation_fraction = 0.0;  // share of V entries driving X that were negative

  int n_paths() const { return static_cast<int>(V.rows()); }
  int n_local_steps() const { return static_cast<int>(dW.cols()); }
  double dt(int local_step) const { return grid.dt(start + local_step); }
};

struct VarianceDraws {
  Matrix V;
  Matrix dW;
};

VarianceDraws simulate_volterra_variance(const ModelParams& params, const TimeGrid& grid, int n_paths,
                                         std::uint64_t seed);

PathEnsemble simulate_joint(const ModelParams& params, const TimeGrid& grid, int n_paths,
                            std::uint64_t seed);

/// Theta^t on path p at the local node t_local of the ensemble.
ForwardCurve theta_curve(const PathEnsemble& ensemble, int path, int t_local);

/// Fresh paths on [t, T] started from (curve, x), curve anchored at t_index.
PathEnsemble conditional_forward(const ModelParams& params, const TimeGrid& grid, int t_index,
                                 const ForwardCurve& curve, double x, int n_paths, std::uint64_t seed);

/// Same dynamics driven by caller-supplied increments (n_paths x (n - t_index)).
PathEnsemble conditional_forward_with_increments(const ModelParams& params, const TimeGrid& grid,
                                                 int t_index, const ForwardCurve& curve, double x,
                                                 const Matrix& dW, const Matrix& dB);

}  // namespace vfbl
