#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mpcnn/errors.hpp"
#include "mpcnn/mpc.hpp"
#include "mpcnn/qp.hpp"
#include "mpcnn/rng.hpp"

using namespace mpcnn;

namespace {

// Independent sparse-formulation oracle: decision vector
// w = [u_0..u_{np-1}; x_1..x_np], dynamics as equality constraints eliminated
// through a FullPivLU nullspace basis, reduced QP solved over the null space.
mpc::PolicyEval sparse_oracle(const mpc::MpcProblem& p, const Eigen::VectorXd& x0) {
  const int nx = p.nx(), nu = p.nu(), np = p.horizon;
  const int nw = np * nu + np * nx;

  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(np * nx, nw);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(np * nx);
  for (int k = 0; k < np; ++k) {
    E.block(k * nx, k * nu, nx, nu) = -p.B;
    E.block(k * nx, np * nu + k * nx, nx, nx) =
        Eigen::MatrixXd::Identity(nx, nx);
    if (k > 0)
      E.block(k * nx, np * nu + (k - 1) * nx, nx, nx) = -p.A;
    else
      f.head(nx) = p.A * x0;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(E);
  const Eigen::VectorXd w_p = lu.solve(f);
  const Eigen::MatrixXd N = lu.kernel();
  REQUIRE(N.cols() == np * nu);

  Eigen::MatrixXd Qw = Eigen::MatrixXd::Zero(nw, nw);
  for (int k = 0; k < np; ++k) Qw.block(k * nu, k * nu, nu, nu) = p.R;
  for (int k = 0; k < np - 1; ++k)
    Qw.block(np * nu + k * nx, np * nu + k * nx, nx, nx) = p.Q;
  Qw.bottomRightCorner(nx, nx) = p.P;

  const int mi = np * p.U.rows() + (np - 1) * p.X.rows() + p.Xf.rows();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(mi, nw);
  Eigen::VectorXd gvec(mi);
  int r = 0;
  for (int k = 0; k < np; ++k) {
    G.block(r, k * nu, p.U.rows(), nu) = p.U.H;
    gvec.segment(r, p.U.rows()) = p.U.h;
    r += p.U.rows();
  }
  for (int k = 0; k < np - 1; ++k) {
    G.block(r, np * nu + k * nx, p.X.rows(), nx) = p.X.H;
    gvec.segment(r, p.X.rows()) = p.X.h;
    r += p.X.rows();
  }
  G.block(r, np * nu + (np - 1) * nx, p.Xf.rows(), nx) = p.Xf.H;
  gvec.segment(r, p.Xf.rows()) = p.Xf.h;

  qp::QpData q;
  q.H = 2.0 * N.transpose() * Qw * N;
  q.H = 0.5 * (q.H + q.H.transpose()).eval();
  q.g = 2.0 * N.transpose() * Qw * w_p;
  q.A = G * N;
  q.b = gvec - G * w_p;

  mpc::PolicyEval out;
  out.u = Eigen::VectorXd::Zero(nu);
  const auto s = qp::solve_qp(q);
  if (s.status != qp::QpStatus::optimal) return out;
  const Eigen::VectorXd w = w_p + N * s.z;
  out.feasible = true;
  out.u = w.head(nu);
  out.v = x0.dot(p.Q * x0) + w.dot(Qw * w);
  return out;
}

}  // namespace

TEST_CASE("dare scalar matches the quadratic-formula oracle") {
  // A=0.5, B=1, Q=R=1: the fixed point solves P^2 - 0.25 P - 1 = 0.
  const auto P = mpc::dare(Eigen::MatrixXd::Constant(1, 1, 0.5),
                           Eigen::MatrixXd::Identity(1, 1),
                           Eigen::MatrixXd::Identity(1, 1),
                           Eigen::MatrixXd::Identity(1, 1));
  const double root = (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0;
  CHECK(P(0, 0) == doctest::Approx(root).epsilon(1e-10));
}

TEST_CASE("dare deadbeat and desk residual") {
  const auto P0 = mpc::dare(Eigen::MatrixXd::Zero(2, 2),
                            Eigen::MatrixXd::Identity(2, 2),
                            Eigen::MatrixXd::Identity(2, 2),
                            Eigen::MatrixXd::Identity(2, 2));
  CHECK(P0.isApprox(Eigen::MatrixXd::Identity(2, 2), 1e-9));

  const auto p = testutil::desk_problem();
  const auto P = mpc::dare(p.A, p.B, p.Q, p.R);
  const auto K = mpc::lqr_gain(p.A, p.B, P, p.R);
  const Eigen::MatrixXd resid =
      p.Q + p.A.transpose() * P * (p.A - p.B * K) - P;
  CHECK(resid.lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("terminal set is invariant and admissible") {
  const auto p = testutil::desk_problem();
  const auto K = mpc::lqr_gain(p.A, p.B, p.P, p.R);
  const Eigen::MatrixXd Ak = p.A - p.B * K;
  Rng rng(31, 0);
  int members = 0;
  while (members < 10000) {
    Eigen::Vector2d x(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
    if (!geometry::contains(p.Xf, x, 0.0)) continue;
    ++members;
    CHECK(geometry::contains(p.X, x, 1e-9));
    CHECK(geometry::contains(p.U, -K * x, 1e-9));
    CHECK(geometry::contains(p.Xf, Ak * x, 1e-9));
  }
}

TEST_CASE("terminal set for a scalar system maps endpoints inside") {
  mpc::MpcProblem p;
  p.A = Eigen::MatrixXd::Constant(1, 1, 0.5);
  p.B = Eigen::MatrixXd::Identity(1, 1);
  p.Q = Eigen::MatrixXd::Identity(1, 1);
  p.R = Eigen::MatrixXd::Identity(1, 1);
  p.P = mpc::dare(p.A, p.B, p.Q, p.R);
  p.horizon = 3;
  p.X = geometry::Polytope::box(1, 5.0);
  p.U = geometry::Polytope::box(1, 1.0);
  p.Xf = mpc::terminal_set(p);

  const auto K = mpc::lqr_gain(p.A, p.B, p.P, p.R);
  const double hi = geometry::support(p.Xf, Eigen::VectorXd::Ones(1));
  const double lo = -geometry::support(p.Xf, -Eigen::VectorXd::Ones(1));
  for (double e : {lo, hi}) {
    Eigen::VectorXd x(1);
    x << e;
    CHECK(geometry::contains(p.Xf, (p.A - p.B * K) * x, 1e-6));
    CHECK(geometry::contains(p.U, -K * x, 1e-6));
  }
}

TEST_CASE("mpc_solve basics") {
  const auto p = testutil::desk_problem();
  const mpc::MpcSolver solver(p);

  const auto at0 = solver.solve(Eigen::Vector2d(0, 0));
  CHECK(at0.feasible);
  CHECK(at0.u.norm() <= 1e-9);
  CHECK(at0.v <= 1e-12);

  // Unconstrained region: MPC equals LQR feedback when P solves the DARE.
  const auto K = mpc::lqr_gain(p.A, p.B, p.P, p.R);
  Rng rng(32, 0);
  for (int t = 0; t < 50; ++t) {
    Eigen::Vector2d x(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
    const auto ev = solver.solve(x);
    REQUIRE(ev.feasible);
    CHECK((ev.u + K * x).norm() <= 1e-7);
    CHECK(ev.v == doctest::Approx(x.dot(p.P * x)).epsilon(1e-7));
  }

  // Outside X: infeasible flag, no throw.
  CHECK(!solver.solve(Eigen::Vector2d(6, 0)).feasible);
}

TEST_CASE("condensed solve matches the sparse-formulation oracle") {
  const auto p = testutil::desk_problem();
  const mpc::MpcSolver solver(p);
  Rng rng(33, 0);
  int compared = 0, feasible_seen = 0;
  while (compared < 200) {
    Eigen::Vector2d x(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
    const auto a = solver.solve(x);
    const auto b = sparse_oracle(p, x);
    CHECK(a.feasible == b.feasible);
    if (a.feasible && b.feasible) {
      CHECK(std::abs(a.v - b.v) <= 1e-6);
      CHECK((a.u - b.u).norm() <= 1e-6);
      ++feasible_seen;
    }
    ++compared;
  }
  CHECK(feasible_seen >= 50);  // the draw box is mostly feasible

  const auto big = solver.solve(Eigen::Vector2d(4, 0));
  const auto big_oracle = sparse_oracle(p, Eigen::Vector2d(4, 0));
  CHECK(big.feasible == big_oracle.feasible);
  if (big.feasible) CHECK(std::abs(big.v - big_oracle.v) <= 1e-6);
}

TEST_CASE("closed-form certification coefficients") {
  CHECK(mpc::c6_closed_form(1, 1, 1, 1, 1) ==
        doctest::Approx((3.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-12));
  CHECK(mpc::c7_closed_form(1, 1, 1, 1, 1) ==
        doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-12));

  // c6 = 1/c7^2: both come from the same quadratic in sqrt(a).
  Rng rng(34, 0);
  for (int t = 0; t < 100; ++t) {
    const double c1 = rng.uniform(0.1, 5.0), c2 = rng.uniform(1.0, 20.0);
    const double c3 = rng.uniform(0.1, 1.0) * c2, c4 = rng.uniform(0.1, 50.0);
    const double c5 = rng.uniform(0.1, 50.0);
    const double c6 = mpc::c6_closed_form(c1, c2, c3, c4, c5);
    const double c7 = mpc::c7_closed_form(c1, c2, c3, c4, c5);
    CHECK(c6 == doctest::Approx(1.0 / (c7 * c7)).epsilon(1e-9));
    // The fixed-point property itself.
    const double delta = 0.01;
    const double a = c6 * delta * delta;
    const double next = (1.0 - c3 / c2) * a +
                        c4 * std::sqrt(a / c1) * delta + c5 * delta * delta;
    CHECK(next == doctest::Approx(a).epsilon(1e-10));
  }
}

TEST_CASE("estimated constants satisfy the stability inequalities") {
  const auto p = testutil::desk_problem();
  const mpc::MpcSolver solver(p);
  const auto c = mpc::estimate_constants(p, 2000, 7);
  CHECK(c.c1 == doctest::Approx(1.0));
  CHECK(c.c3 == doctest::Approx(1.0));
  CHECK(c.c1 <= c.c2);
  CHECK(c.c3 <= c.c2);
  CHECK(c.c4 > 0);
  CHECK(c.c8 > 0);
  // c8 strictly below the rate root of c4 c8 + c5 c8^2 = c1 c3 / c2.
  CHECK(c.c4 * c.c8 + c.c5 * c.c8 * c.c8 < c.c1 * c.c3 / c.c2);

  Rng rng(35, 0);
  int checked = 0, eq4_viol = 0, lip_viol = 0;
  std::vector<Eigen::Vector2d> members;
  std::vector<double> values;
  while (checked < 2000) {
    Eigen::Vector2d x(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
    const auto ev = solver.solve(x);
    if (!ev.feasible || ev.v > c.gamma) continue;
    ++checked;
    members.push_back(x);
    values.push_back(ev.v);
    const double n2 = x.squaredNorm();
    if (!(c.c1 * n2 <= ev.v * (1 + 1e-9) + 1e-12)) ++eq4_viol;
    if (!(ev.v <= c.c2 * n2 * (1 + 1e-9) + 1e-12)) ++eq4_viol;
    const auto next = solver.solve(p.A * x + p.B * ev.u);
    REQUIRE(next.feasible);
    if (!(next.v - ev.v <= -c.c3 * n2 + 1e-9)) ++eq4_viol;
    if (!(next.v <= c.gamma * (1 + 1e-9))) ++eq4_viol;
  }
  CHECK(eq4_viol == 0);

  for (int t = 0; t < 2000; ++t) {
    const auto i = rng.uniform_int(members.size());
    const auto j = rng.uniform_int(members.size());
    const double dist = (members[i] - members[j]).norm();
    const double mx = std::max(members[i].norm(), members[j].norm());
    if (dist < 1e-9 || mx < 1e-9) continue;
    if (!(std::abs(values[i] - values[j]) <= c.c0 * mx * dist * (1 + 1e-9)))
      ++lip_viol;
  }
  CHECK(lip_viol == 0);
}

TEST_CASE("in_sublevel") {
  const auto p = testutil::desk_problem();
  const mpc::MpcSolver solver(p);
  const auto c = mpc::estimate_constants(p, 1000, 3);
  CHECK(mpc::in_sublevel(solver, c, Eigen::Vector2d(0, 0)));
  CHECK(!mpc::in_sublevel(solver, c, Eigen::Vector2d(6, 0)));
}
