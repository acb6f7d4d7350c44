#pragma once

#include <Eigen/Dense>

#include "mpcnn/geometry.hpp"

namespace mpcnn::scaling {

/// Parameters of the state-aware error schedule: plateau delta_lo near the
/// origin, slope c8 in between, cap delta_hi far out; eps is the constraint
/// tightening budget.
struct ScalingParams {
  double c8 = 0;
  double delta_lo = 0;  // lower plateau
  double delta_hi = 0;  // upper cap
  double eps = 0;       // tightening budget

  void validate() const;
  /// Precondition of the end-to-end recovery bound: eps may not exceed
  /// delta_hi * d(U) / (2 D(U)).
  void validate_against(const geometry::Polytope& U) const;
};

/// Default lower plateau: min{delta_hi, sqrt(c1/c6) * d_target} for a target
/// invariant set of inradius d_target.
double default_delta_lo(double c1, double c6, double delta_hi, double d_target);

/// The state-dependent error budget (plateau / linear / cap).
double delta2(const Eigen::VectorXd& x, const ScalingParams& p);

/// Output scale beta(x) = delta2(x) / delta_hi, in [delta_lo/delta_hi, 1].
double beta(const Eigen::VectorXd& x, const ScalingParams& p);

/// Radial input magnification map (three smooth branches, T(0) = 0).
Eigen::VectorXd t_forward(const Eigen::VectorXd& x, const ScalingParams& p);

/// Exact inverse of t_forward.
Eigen::VectorXd t_inverse(const Eigen::VectorXd& y, const ScalingParams& p);

/// Projected and rescaled policy value: the network's training target,
/// Pi_{U'(eps*beta(x))}(u) / beta(x).
Eigen::VectorXd scaled_target(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u_mpc_val,
                              const ScalingParams& p,
                              const geometry::Polytope& U);

/// Network output back to actuator units: net_out * beta(x).
Eigen::VectorXd recover_control(const Eigen::VectorXd& net_out,
                                const Eigen::VectorXd& x,
                                const ScalingParams& p);

}  // namespace mpcnn::scaling
