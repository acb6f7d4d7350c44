#include "mpcnn/scaling.hpp"

#include <cmath>

#include "mpcnn/errors.hpp"

namespace mpcnn::scaling {

namespace {
constexpr double kNormFloor = 1e-300;  // guard for x/||x||
}

void ScalingParams::validate() const {
  if (!(c8 > 0.0)) throw ValidationError("scaling: c8 must be positive");
  if (!(delta_lo > 0.0) || !(delta_hi > 0.0))
    throw ValidationError("scaling: delta bounds must be positive");
  if (delta_lo > delta_hi)
    throw ValidationError("scaling: delta_lo > delta_hi");
  if (eps < 0.0) throw ValidationError("scaling: eps must be nonnegative");
}

void ScalingParams::validate_against(const geometry::Polytope& U) const {
  validate();
  const double dU = geometry::inradius(U);
  const double DU = geometry::radius(U);
  if (eps > delta_hi * dU / (2.0 * DU))
    throw ValidationError("scaling: eps exceeds delta_hi * d(U) / (2 D(U))");
}

double default_delta_lo(double c1, double c6, double delta_hi, double d_target) {
  if (!(d_target > 0.0))
    throw ValidationError("default_delta_lo: target inradius must be positive");
  return std::min(delta_hi, std::sqrt(c1 / c6) * d_target);
}

double delta2(const Eigen::VectorXd& x, const ScalingParams& p) {
  const double r = x.norm();
  if (r <= p.delta_lo / p.c8) return p.delta_lo;
  if (r < p.delta_hi / p.c8) return p.c8 * r;
  return p.delta_hi;
}

double beta(const Eigen::VectorXd& x, const ScalingParams& p) {
  return delta2(x, p) / p.delta_hi;
}

Eigen::VectorXd t_forward(const Eigen::VectorXd& x, const ScalingParams& p) {
  const double r = x.norm();
  if (r <= p.delta_lo / p.c8) return (p.delta_hi / p.delta_lo) * x;
  const Eigen::VectorXd dir = x / std::max(r, kNormFloor);
  if (r < p.delta_hi / p.c8) {
    const double rho =
        (p.delta_hi / p.c8) * (1.0 + 2.0 * std::log(p.c8 * r / p.delta_lo));
    return rho * dir;
  }
  return x + (2.0 * p.delta_hi / p.c8) * std::log(p.delta_hi / p.delta_lo) * dir;
}

Eigen::VectorXd t_inverse(const Eigen::VectorXd& y, const ScalingParams& p) {
  const double r = y.norm();
  if (r <= p.delta_hi / p.c8) return (p.delta_lo / p.delta_hi) * y;
  const Eigen::VectorXd dir = y / std::max(r, kNormFloor);
  const double mid_edge =
      (p.delta_hi / p.c8) * (1.0 + 2.0 * std::log(p.delta_hi / p.delta_lo));
  if (r <= mid_edge) {
    const double rho =
        (p.delta_lo / p.c8) * std::exp((p.c8 * r / p.delta_hi - 1.0) / 2.0);
    return rho * dir;
  }
  return y - (2.0 * p.delta_hi / p.c8) * std::log(p.delta_hi / p.delta_lo) * dir;
}

Eigen::VectorXd scaled_target(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u_mpc_val,
                              const ScalingParams& p,
                              const geometry::Polytope& U) {
  const double b = beta(x, p);
  const double shrink = p.eps * b;
  if (shrink == 0.0) return u_mpc_val / b;
  if (shrink >= geometry::inradius(U))
    throw ValidationError("scaled_target: state-aware tightening infeasible");
  return geometry::project(geometry::tighten(U, shrink), u_mpc_val) / b;
}

Eigen::VectorXd recover_control(const Eigen::VectorXd& net_out,
                                const Eigen::VectorXd& x,
                                const ScalingParams& p) {
  return net_out * beta(x, p);
}

}  // namespace mpcnn::scaling
