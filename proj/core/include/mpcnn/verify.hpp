#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mpcnn/mpc.hpp"
#include "mpcnn/nn.hpp"
#include "mpcnn/scaling.hpp"

namespace mpcnn::verify {

enum class Regime { uniform, scaled };

/// The certified policy under test: a trained net plus the input/output
/// transformations recorded at dataset build time.
struct Policy {
  nn::ReluNet net;
  Regime regime = Regime::uniform;
  double input_halfwidth = 0;  // D(Xinv) for uniform, D2 for scaled
  scaling::ScalingParams params;  // used in the scaled regime only

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
};

enum class ViolationKind { input_set, error_bound, sublevel, state_set };

struct Violation {
  std::int64_t index;  // sample or step
  ViolationKind kind;
  double margin;
};

struct VerificationReport {
  std::int64_t n_samples = 0;
  std::int64_t input_violations = 0;
  std::int64_t error_violations = 0;
  std::int64_t invariance_failures = 0;
  double max_input_violation = 0;   // worst H u - h excess over rownorm
  double max_error_vs_bound = 0;    // worst ||u_nn - u_mpc|| - bound
  double max_successor_value = 0;   // worst v_mpc(Ax + Bu_nn)
  std::vector<Violation> violations;

  bool certified() const {
    return input_violations == 0 && error_violations == 0 &&
           invariance_failures == 0;
  }
};

struct Trajectory {
  std::vector<Eigen::VectorXd> states;  // length T+1
  std::vector<Eigen::VectorXd> inputs;  // length T
  std::vector<double> values;           // v_mpc per state; NaN if infeasible
  std::vector<Violation> violations;
};

using PolicyFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using BoundFn = std::function<double(const Eigen::VectorXd&)>;

/// Pointwise certification over n fresh sublevel-set samples: input
/// admissibility, error against the state-wise budget, and invariance of the
/// sublevel set.
VerificationReport check_pointwise(const mpc::MpcSolver& solver,
                                   const mpc::Constants& c,
                                   const PolicyFn& policy, const BoundFn& bound,
                                   std::int64_t n, std::uint64_t seed);

/// Convenience overload: the budget is delta1 in the uniform regime and
/// delta2(x) in the scaled regime.
VerificationReport check_pointwise(const mpc::MpcSolver& solver,
                                   const mpc::Constants& c, const Policy& policy,
                                   double delta1, std::int64_t n,
                                   std::uint64_t seed);

/// Closed loop x+ = Ax + B u_policy(x) for T steps; violations are recorded
/// and the rollout continues.
Trajectory rollout(const mpc::MpcSolver& solver, const PolicyFn& policy,
                   const Eigen::VectorXd& x0, int T_steps);

/// Exact-MPC rollout (the reference controller in closed loop).
Trajectory rollout_mpc(const mpc::MpcSolver& solver, const Eigen::VectorXd& x0,
                       int T_steps);

/// a_0 = gamma, a_{k+1} = (1 - c3/c2) a_k + c4 sqrt(a_k/c1) delta1 +
/// c5 delta1^2. Requires delta1 < c7 sqrt(gamma).
std::vector<double> lyapunov_sequence(double gamma, const mpc::Constants& c,
                                      double delta1, int K);

struct ConvergenceMetrics {
  double time_to_terminal = -1;  // -1 sentinel: never entered
  double tail_mean_state_norm = 0;
  double final_v = 0;
  double closed_loop_cost = 0;  // sum of x'Qx + u'Ru along the rollout
};

/// Entry time into the v <= c6 delta1^2 sublevel set, tail statistics and
/// cumulative cost.
ConvergenceMetrics convergence_metrics(const Trajectory& traj,
                                       const mpc::MpcProblem& prob,
                                       const mpc::Constants& c, double delta1,
                                       int tail_len);

void save_trajectory(const Trajectory& traj, const std::string& path);

}  // namespace mpcnn::verify
