#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vfbl/bsde.hpp"
#include "vfbl/pathderiv.hpp"

namespace vfbl {

struct PsiEstimates {
  Vector value;
  Vector std_error;
};

/// psi = Z_W - rho chi(V) d_x u at local step t_local, per path.
/// With dxu == nullptr the regression proxy d_x u = Z_B / (rho_bar chi(V)) is used,
/// which needs rho_bar > 0. flip_rho_sign replaces rho by -rho in the subtraction.
PsiEstimates reconstruct_psi(const BsdeSolution& solution, const PathEnsemble& ensemble, int t_local,
                             const Vector* dxu = nullptr, const Vector* dxu_se = nullptr,
                             bool flip_rho_sign = false);

enum class DxuSource { Regression, Nested };
enum class DirectionKind { DiscreteKernel, ShiftedKernel };

struct IdentityThresholds {
  double z_max = 3.0;
  double min_fraction = 0.9;
  double slope_lo = 0.9;
  double slope_hi = 1.1;
  double min_r2 = 0.9;
  double degenerate_variance = 1e-12;  // rhs sample variance below this skips the slope test
  double flag_sigma = 4.0;             // martingale residual
};

struct IdentityConfig {
  ModelParams model;
  TimeGrid grid = TimeGrid::uniform(1.0, 32);
  Payoff payoff;
  int t_index = 16;
  int n_states = 20;
  int inner_paths = 100000;
  int lhs_batches = 10;
  BumpSpec bump;
  BasisSpec basis;
  BsdeOptions bsde;
  DxuSource dxu_source = DxuSource::Regression;
  DirectionKind direction = DirectionKind::DiscreteKernel;
  Estimator rhs_estimator = Estimator::Pathwise;
  IdentityThresholds thresholds;
  std::uint64_t seed = 20240601;
  bool corrupt_rho_sign = false;  // negative control
};

/// Default rough configuration: H = 0.3, rho = -0.7, ATM call, t = T/2, 20 states,
/// 1e5 inner paths, 32 steps.
IdentityConfig default_identity_config();

struct StateRecord {
  int state = 0;
  double x = 0.0;
  double v = 0.0;  // curve value at the anchor
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  double rhs_se = 0.0;
  double z = 0.0;
  std::optional<std::string> error;
};

struct IdentityAggregate {
  double mean_abs_z = 0.0;
  double fraction_within = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool degenerate = false;
  bool passed = false;
};

struct IdentityReport {
  std::string which;
  int t_index = 0;
  int n_states = 0;
  std::vector<StateRecord> records;
  IdentityAggregate aggregate;
};

/// (lhs - rhs) / sqrt(se_lhs^2 + se_rhs^2), kept finite when both errors vanish.
double z_score(double lhs, double lhs_se, double rhs, double rhs_se);

/// Fills the aggregate of a report from its records.
void aggregate_report(IdentityReport& report, const IdentityThresholds& thresholds);

/// psi from the backward regression against the pathwise derivative along the kernel.
IdentityReport verify_proposition1(const IdentityConfig& config);

/// B-component of Z against rho_bar chi(V) d_x u.
IdentityReport verify_z1(const IdentityConfig& config);

struct MartingaleReport {
  std::vector<StepResidual> steps;
  int flagged = 0;
  bool passed = false;
};

/// Solves the zero-driver BSDE on an unconditional ensemble of inner_paths and checks
/// the martingale residual. z_scale multiplies Z before the check (negative control).
MartingaleReport verify_martingale(const IdentityConfig& config, double z_scale = 1.0);

}  // namespace vfbl
