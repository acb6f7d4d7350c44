#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "mpcnn/geometry.hpp"

namespace mpcnn::mpc {

/// Finite-horizon quadratic regulator data for x+ = Ax + Bu with polytopic
/// state/input/terminal constraints.
struct MpcProblem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Q;   // PSD stage state weight
  Eigen::MatrixXd R;   // PD stage input weight
  Eigen::MatrixXd P;   // PSD terminal weight
  int horizon = 0;
  geometry::Polytope X;
  geometry::Polytope U;
  geometry::Polytope Xf;

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
};

/// Throws ValidationError on dimension mismatch or indefinite weights.
void validate(const MpcProblem& prob);

/// Discrete algebraic Riccati solution by fixed-point iteration from P0 = Q;
/// converges for stabilizable (A, B). Residual <= 1e-9 on exit.
Eigen::MatrixXd dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

/// LQR gain K for u = -Kx given the Riccati solution P.
Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const Eigen::MatrixXd& P, const Eigen::MatrixXd& R);

/// Maximal constraint-admissible invariant set for x+ = (A - BK)x under
/// x in X, -Kx in U, by constraint propagation (cap 200 steps).
geometry::Polytope terminal_set(const MpcProblem& prob);

struct PolicyEval {
  Eigen::VectorXd u;
  double v = 0.0;
  bool feasible = false;
};

/// Condensed (dense) MPC evaluator; prediction matrices are built once and
/// reused across solves.
class MpcSolver {
 public:
  explicit MpcSolver(const MpcProblem& prob);

  PolicyEval solve(const Eigen::VectorXd& x) const;
  const MpcProblem& problem() const { return prob_; }

 private:
  MpcProblem prob_;
  Eigen::MatrixXd F_;       // stacked A^k, k = 1..np
  Eigen::MatrixXd G_;       // input-to-state prediction map
  Eigen::MatrixXd Hq_;      // condensed Hessian
  Eigen::MatrixXd Gt_;      // 2 G' Qbar F (gradient map)
  Eigen::MatrixXd const_q_; // Q + F' Qbar F (value offset quadratic)
  Eigen::MatrixXd Acon_;
  Eigen::VectorXd bcon0_;
  Eigen::MatrixXd Wcon_;    // state-dependent rhs: b = bcon0 + Wcon x
};

/// One-shot convenience wrapper.
PolicyEval mpc_solve(const MpcProblem& prob, const Eigen::VectorXd& x);

/// Certification parameter block. Fields tagged "analytic" are sound bounds;
/// sampled fields carry the safety factor used at estimation time.
struct Constants {
  double c0 = 0, c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0, c6 = 0, c7 = 0, c8 = 0;
  double gamma = 0;
  double L_u = 0;
  double delta_bar = 0;
  double D_Xinv = 0;  // sampled radius of the gamma-sublevel set
};

Constants estimate_constants(const MpcProblem& prob, int n_samples,
                             std::uint64_t seed, double safety = 1.1);

/// Fixed-point coefficient of the Lyapunov recursion: the invariant level is
/// c6 * delta1^2.
double c6_closed_form(double c1, double c2, double c3, double c4, double c5);
/// Decrease-condition coefficient: strict decrease requires delta1 < c7 sqrt(v).
double c7_closed_form(double c1, double c2, double c3, double c4, double c5);

/// True iff x is MPC-feasible with optimal value <= gamma.
bool in_sublevel(const MpcSolver& solver, const Constants& c,
                 const Eigen::VectorXd& x);

}  // namespace mpcnn::mpc
