#include "vfbl/regression.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "vfbl/errors.hpp"

namespace vfbl {

LeastSquares::LeastSquares(const Eigen::MatrixXd& design, double max_condition) : design_(design) {
  if (design.rows() < design.cols())
    throw SingularRegression("fewer samples (" + std::to_string(design.rows()) + ") than basis functions (" +
                             std::to_string(design.cols()) + ")");
  normal_ = design.transpose() * design;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal_, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition_ <= max_condition))
    throw SingularRegression("normal-equations condition number " + std::to_string(condition_) +
                             " exceeds " + std::to_string(max_condition));
  ldlt_.compute(normal_);
}

Eigen::MatrixXd LeastSquares::solve(const Eigen::MatrixXd& targets) const {
  return ldlt_.solve(design_.transpose() * targets);
}

Eigen::MatrixXd LeastSquares::inverse() const {
  return ldlt_.solve(Eigen::MatrixXd::Identity(normal_.rows(), normal_.cols()));
}

Eigen::VectorXd LeastSquares::leverage_scale() const {
  const Eigen::MatrixXd inv = inverse();
  return ((design_ * inv).cwiseProduct(design_)).rowwise().sum().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace vfbl
