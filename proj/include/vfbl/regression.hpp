#pragma once

#include <Eigen/Dense>

namespace vfbl {

/// Least squares on a fixed design, solved through the normal equations.
/// Throws SingularRegression when the normal matrix is too ill-conditioned.
class LeastSquares {
 public:
  explicit LeastSquares(const Eigen::MatrixXd& design, double max_condition = 1e12);

  Eigen::MatrixXd solve(const Eigen::MatrixXd& targets) const;
  /// sqrt(phi_i^T (Phi^T Phi)^{-1} phi_i) per row, to be scaled by the residual std.
  Eigen::VectorXd leverage_scale() const;
  /// (Phi^T Phi)^{-1}.
  Eigen::MatrixXd inverse() const;

  double condition_number() const { return condition_; }
  const Eigen::MatrixXd& design() const { return design_; }

 private:
  const Eigen::MatrixXd& design_;
  Eigen::MatrixXd normal_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  double condition_ = 1.0;
};

}  // namespace vfbl
