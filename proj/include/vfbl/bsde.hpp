#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vfbl/paths.hpp"
#include "vfbl/valuation.hpp"

namespace vfbl {

enum class DriverKind { Zero, LinearDiscount, Custom };

/// Driver F_t(e^x, y, z1, z2) of the backward equation
///   Y_s = G(e^{X_T}) + int_s^T F_r(e^{X_r}, Y_r, Z_r) dr - int_s^T Z_r . dW_r.
struct Driver {
  using Function = std::function<double(double t, double spot, double y, double z1, double z2)>;

  DriverKind kind = DriverKind::Zero;
  double rate = 0.0;                  // LinearDiscount: F = -rate * y
  Function custom;                    // Custom
  std::optional<double> lipschitz;    // required for Custom

  static Driver zero() { return {}; }
  static Driver linear_discount(double rate) { return {DriverKind::LinearDiscount, rate, {}, std::abs(rate)}; }
  static Driver make_custom(Function f, std::optional<double> lipschitz) {
    return {DriverKind::Custom, 0.0, std::move(f), lipschitz};
  }

  /// Throws LipschitzViolation for a Custom driver without a declared bound.
  void validate() const;
  double operator()(double t, double spot, double y, double z1, double z2) const;
};

/// Regression features at each step. Polynomial terms use the enabled state features;
/// the intrinsic and Black-Scholes proxies enter linearly.
struct BasisSpec {
  int degree = 2;
  bool use_x = true;
  bool use_v = true;
  bool use_int_v = true;              // int_0^t V ds
  bool use_forward_variance = false;  // int_t^T Theta^t_s ds
  bool intrinsic = true;              // G(e^X)
  bool bs_proxy = false;              // Gaussian value of G with the forward variance

  std::string describe() const;
};

/// How Z is estimated at each step.
///  IncrementProjection: Z_W = E[(Y_{k+1} - E_k Y_{k+1}) dW_k | F_k] / dt, likewise Z_B.
///  JointRegression: Y_{k+1} regressed on (phi, phi dW, phi dB) in one least-squares fit.
enum class ZEstimator { IncrementProjection, JointRegression };

struct BsdeOptions {
  ZEstimator z_estimator = ZEstimator::IncrementProjection;
  int picard_iterations = 0;
  double max_condition = 1e12;
};

/// Discrete (Y, Z) on the ensemble grid. Z1 is the B-component, Z2 the W-component,
/// i.e. (rho_bar sqrt(V) D u, rho sqrt(V) D u + psi).
struct BsdeSolution {
  TimeGrid grid;
  int start = 0;
  Matrix Y;        // n_paths x (m+1)
  Matrix Z1;       // n_paths x m, B-component
  Matrix Z2;       // n_paths x m, W-component
  Matrix Z1_se;    // regression standard error of Z1 per path
  Matrix Z2_se;
  Driver driver;
  std::string basis_spec;
  std::vector<double> condition_numbers;  // per step
  std::vector<int> basis_sizes;           // per step

  int n_steps() const { return static_cast<int>(Z1.cols()); }
};

BsdeSolution solve_bsde(const PathEnsemble& ensemble, const Payoff& payoff, const Driver& driver,
                        const BasisSpec& basis, const BsdeOptions& options = {});

struct StepResidual {
  int step = 0;
  double mean = 0.0;  // of R = Y_{k+1} + F dt - Y_k - Z1 dB - Z2 dW
  double std_error = 0.0;
  double w_moment = 0.0;  // mean of R dW / dt
  double w_std_error = 0.0;
  double b_moment = 0.0;  // mean of R dB / dt
  double b_std_error = 0.0;
  bool flagged = false;
};

/// Per-step martingale diagnostics. A step is flagged when any moment exceeds
/// flag_sigma standard errors.
std::vector<StepResidual> martingale_residual(const BsdeSolution& solution, const PathEnsemble& ensemble,
                                              double flag_sigma = 4.0);

/// Features of the ensemble at a local step, before standardization (exposed for tests).
Matrix state_features(const PathEnsemble& ensemble, const Payoff& payoff, const BasisSpec& basis, int step);

/// Regression design at a local step: a constant column followed by standardized basis
/// functions, with constant, sparsely supported or linearly dependent columns removed.
Matrix regression_design(const PathEnsemble& ensemble, const Payoff& payoff, const BasisSpec& basis, int step);

}  // namespace vfbl
