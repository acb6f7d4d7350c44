#include "mpcnn/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mpcnn/errors.hpp"
#include "mpcnn/qp.hpp"
#include "mpcnn/rng.hpp"

namespace mpcnn::mpc {

namespace {

double spectral_norm(const Eigen::MatrixXd& M) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

double min_eigenvalue(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

void validate(const MpcProblem& prob) {
  const int nx = prob.nx();
  const int nu = prob.nu();
  if (prob.A.cols() != nx || prob.B.rows() != nx)
    throw ValidationError("mpc: A/B dimension mismatch");
  if (prob.Q.rows() != nx || prob.Q.cols() != nx)
    throw ValidationError("mpc: Q dimension mismatch");
  if (prob.R.rows() != nu || prob.R.cols() != nu)
    throw ValidationError("mpc: R dimension mismatch");
  if (prob.P.rows() != nx || prob.P.cols() != nx)
    throw ValidationError("mpc: P dimension mismatch");
  if (prob.horizon < 1)
    throw ValidationError("mpc: horizon must be positive");
  if (prob.X.dim() != nx || prob.Xf.dim() != nx || prob.U.dim() != nu)
    throw ValidationError("mpc: constraint set dimension mismatch");
  if (min_eigenvalue(prob.Q) < -1e-10)
    throw ValidationError("mpc: Q not positive semidefinite");
  if (min_eigenvalue(prob.P) < -1e-10)
    throw ValidationError("mpc: P not positive semidefinite");
  if (min_eigenvalue(prob.R) <= 1e-12)
    throw ValidationError("mpc: R not positive definite");
}

Eigen::MatrixXd dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  Eigen::MatrixXd P = Q;
  const int cap = 100000;
  for (int k = 0; k < cap; ++k) {
    Eigen::MatrixXd BtPB = B.transpose() * P * B;
    Eigen::MatrixXd K = (R + BtPB).ldlt().solve(B.transpose() * P * A);
    Eigen::MatrixXd Pn = Q + A.transpose() * P * (A - B * K);
    Pn = 0.5 * (Pn + Pn.transpose());
    const double res = (Pn - P).lpNorm<Eigen::Infinity>();
    P = Pn;
    if (!P.allFinite())
      throw NumericError("dare: divergence, (A, B) not stabilizable");
    if (res <= 1e-12 * std::max(1.0, P.lpNorm<Eigen::Infinity>())) {
      // Final residual check against the Riccati equation itself.
      Eigen::MatrixXd K2 = (R + B.transpose() * P * B).ldlt()
                               .solve(B.transpose() * P * A);
      Eigen::MatrixXd resid =
          Q + A.transpose() * P * (A - B * K2) - P;
      if (resid.lpNorm<Eigen::Infinity>() > 1e-9)
        throw NumericError("dare: residual above tolerance");
      return P;
    }
  }
  throw NumericError("dare: no convergence, (A, B) likely not stabilizable");
}

Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const Eigen::MatrixXd& P, const Eigen::MatrixXd& R) {
  return (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
}

geometry::Polytope terminal_set(const MpcProblem& prob) {
  const Eigen::MatrixXd Pd = dare(prob.A, prob.B, prob.Q, prob.R);
  const Eigen::MatrixXd K = lqr_gain(prob.A, prob.B, Pd, prob.R);
  const Eigen::MatrixXd Ak = prob.A - prob.B * K;
  {
    Eigen::EigenSolver<Eigen::MatrixXd> es(Ak);
    if (es.eigenvalues().cwiseAbs().maxCoeff() >= 1.0 - 1e-12)
      throw NumericError("terminal_set: closed-loop matrix not Schur stable");
  }

  // Base rows: x in X and Kx in U.
  const int nx = prob.nx();
  Eigen::MatrixXd C(prob.X.rows() + prob.U.rows(), nx);
  Eigen::VectorXd c(C.rows());
  C.topRows(prob.X.rows()) = prob.X.H;
  c.head(prob.X.rows()) = prob.X.h;
  C.bottomRows(prob.U.rows()) = -prob.U.H * K;
  c.tail(prob.U.rows()) = prob.U.h;

  Eigen::MatrixXd rows = C;
  Eigen::VectorXd offs = c;
  Eigen::MatrixXd Akp = Ak;  // A_K^{k+1} applied to base rows
  const int cap = 200;
  for (int k = 0; k < cap; ++k) {
    geometry::Polytope cur(rows, offs);
    Eigen::MatrixXd cand = C * Akp;
    bool added = false;
    for (int i = 0; i < cand.rows(); ++i) {
      const Eigen::VectorXd row = cand.row(i).transpose();
      if (row.norm() < 1e-12) continue;  // row annihilated by the dynamics
      if (geometry::halfspace_intersects(cur, row, c(i) + 1e-9, 0.0)) {
        const int r = static_cast<int>(rows.rows());
        rows.conservativeResize(r + 1, nx);
        offs.conservativeResize(r + 1);
        rows.row(r) = row.transpose();
        offs(r) = c(i);
        added = true;
      }
    }
    if (!added) return geometry::Polytope(rows, offs);
    Akp = Akp * Ak;
  }
  throw NumericError("terminal_set: no convergence within 200 iterations");
}

MpcSolver::MpcSolver(const MpcProblem& prob) : prob_(prob) {
  validate(prob_);
  const int nx = prob_.nx();
  const int nu = prob_.nu();
  const int np = prob_.horizon;
  const int nz = np * nu;

  F_.resize(np * nx, nx);
  G_.setZero(np * nx, nz);
  Eigen::MatrixXd Apow = prob_.A;  // A^{k+1} for block k
  std::vector<Eigen::MatrixXd> apows(np + 1);
  apows[0] = Eigen::MatrixXd::Identity(nx, nx);
  for (int k = 1; k <= np; ++k) apows[k] = prob_.A * apows[k - 1];
  for (int k = 1; k <= np; ++k) {
    F_.middleRows((k - 1) * nx, nx) = apows[k];
    for (int j = 0; j < k; ++j)
      G_.block((k - 1) * nx, j * nu, nx, nu) = apows[k - 1 - j] * prob_.B;
  }

  Eigen::MatrixXd Qbar = Eigen::MatrixXd::Zero(np * nx, np * nx);
  for (int k = 1; k < np; ++k)
    Qbar.block(k * nx - nx, k * nx - nx, nx, nx) = prob_.Q;
  Qbar.bottomRightCorner(nx, nx) = prob_.P;
  Eigen::MatrixXd Rbar = Eigen::MatrixXd::Zero(nz, nz);
  for (int k = 0; k < np; ++k)
    Rbar.block(k * nu, k * nu, nu, nu) = prob_.R;

  Hq_ = 2.0 * (G_.transpose() * Qbar * G_ + Rbar);
  Hq_ = 0.5 * (Hq_ + Hq_.transpose());
  Gt_ = 2.0 * G_.transpose() * Qbar * F_;
  const_q_ = prob_.Q + F_.transpose() * Qbar * F_;

  // Constraints: u_k in U for all k; x_k in X for k = 1..np-1; x_np in Xf.
  const int mu = prob_.U.rows();
  const int mx = prob_.X.rows();
  const int mf = prob_.Xf.rows();
  const int mtot = np * mu + (np - 1) * mx + mf;
  Acon_.setZero(mtot, nz);
  bcon0_.resize(mtot);
  Wcon_.setZero(mtot, nx);
  int r = 0;
  for (int k = 0; k < np; ++k) {
    Acon_.block(r, k * nu, mu, nu) = prob_.U.H;
    bcon0_.segment(r, mu) = prob_.U.h;
    r += mu;
  }
  for (int k = 1; k < np; ++k) {
    Acon_.middleRows(r, mx) = prob_.X.H * G_.middleRows((k - 1) * nx, nx);
    bcon0_.segment(r, mx) = prob_.X.h;
    Wcon_.middleRows(r, mx) = -prob_.X.H * F_.middleRows((k - 1) * nx, nx);
    r += mx;
  }
  Acon_.middleRows(r, mf) = prob_.Xf.H * G_.bottomRows(nx);
  bcon0_.segment(r, mf) = prob_.Xf.h;
  Wcon_.middleRows(r, mf) = -prob_.Xf.H * F_.bottomRows(nx);
}

PolicyEval MpcSolver::solve(const Eigen::VectorXd& x) const {
  if (x.size() != prob_.nx())
    throw ValidationError("mpc_solve: state dimension mismatch");
  PolicyEval out;
  out.u = Eigen::VectorXd::Zero(prob_.nu());
  if (!geometry::contains(prob_.X, x, 1e-9)) return out;  // x_0 constraint

  qp::QpData q;
  q.H = Hq_;
  q.g = Gt_ * x;
  q.A = Acon_;
  q.b = bcon0_ + Wcon_ * x;
  auto sol = qp::solve_qp(q);
  if (sol.status == qp::QpStatus::infeasible) return out;
  if (sol.status != qp::QpStatus::optimal)
    throw NumericError("mpc_solve: QP solver hit iteration cap at state norm " +
                       std::to_string(x.norm()));
  out.feasible = true;
  out.u = sol.z.head(prob_.nu());
  out.v = sol.objective + x.dot(const_q_ * x);
  if (out.v < 0.0 && out.v > -1e-9) out.v = 0.0;
  return out;
}

PolicyEval mpc_solve(const MpcProblem& prob, const Eigen::VectorXd& x) {
  return MpcSolver(prob).solve(x);
}

Constants estimate_constants(const MpcProblem& prob, int n_samples,
                             std::uint64_t seed, double safety) {
  if (n_samples < 1000)
    throw ValidationError("estimate_constants: n_samples must be >= 1000");
  if (safety < 1.0)
    throw ValidationError("estimate_constants: safety factor must be >= 1");
  MpcSolver solver(prob);
  const int nx = prob.nx();

  Constants c;
  c.c1 = min_eigenvalue(prob.Q);
  c.c3 = c.c1;
  if (c.c1 <= 0.0)
    throw CertificationError("estimate_constants: lambda_min(Q) must be positive");

  // Bounding box of X for rejection sampling.
  Eigen::VectorXd box_hi(nx);
  for (int i = 0; i < nx; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(nx);
    e(i) = 1.0;
    box_hi(i) = std::max(geometry::support(prob.X, e),
                         geometry::support(prob.X, -e));
  }

  struct Sample {
    Eigen::VectorXd x;
    double v;
    double v_next;
    bool next_feasible;
  };
  std::vector<Sample> samples;
  samples.reserve(n_samples);
  const std::uint64_t draw_cap = 200ull * static_cast<std::uint64_t>(n_samples);
  for (std::uint64_t draw = 0; draw < draw_cap &&
       samples.size() < static_cast<size_t>(n_samples); ++draw) {
    Rng rng(seed, draw);
    Eigen::VectorXd x(nx);
    for (int i = 0; i < nx; ++i) x(i) = rng.uniform(-box_hi(i), box_hi(i));
    auto ev = solver.solve(x);
    if (!ev.feasible) continue;
    Eigen::VectorXd xn = prob.A * x + prob.B * ev.u;
    auto evn = solver.solve(xn);
    samples.push_back({x, ev.v, evn.v, evn.feasible});
  }
  if (samples.empty())
    throw NumericError("estimate_constants: no feasible samples found");

  double vmax = 0.0, c2_raw = 0.0;
  for (const auto& s : samples) {
    vmax = std::max(vmax, s.v);
    const double nrm2 = s.x.squaredNorm();
    if (nrm2 >= 1e-12) c2_raw = std::max(c2_raw, s.v / nrm2);
  }
  c.c2 = safety * c2_raw;

  // Largest gamma whose sampled sublevel set is one-step invariant.
  auto sublevel_ok = [&](double g) {
    for (const auto& s : samples) {
      if (s.v > g) continue;
      if (!s.next_feasible || s.v_next > g) return false;
    }
    return true;
  };
  double lo = 0.0, hi = vmax;
  if (sublevel_ok(vmax)) {
    lo = vmax;
  } else {
    for (int it = 0; it < 64; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (sublevel_ok(mid)) lo = mid; else hi = mid;
    }
  }
  c.gamma = lo;

  // Members of the sublevel set.
  std::vector<const Sample*> members;
  for (const auto& s : samples)
    if (s.v <= c.gamma) members.push_back(&s);
  if (members.empty())
    throw NumericError("estimate_constants: empty sampled sublevel set");

  double d_xinv = 0.0;
  for (const auto* s : members) d_xinv = std::max(d_xinv, s->x.norm());
  c.D_Xinv = safety * d_xinv;

  // Sampled GLC of the policy via central differences.
  const double Dx = geometry::radius(prob.X);
  const double h = 1e-4 * Dx;
  const size_t fd_budget = std::min<size_t>(members.size(), 2000);
  double lu_raw = 0.0;
  for (size_t i = 0; i < fd_budget; ++i) {
    const auto& s = *members[i * members.size() / fd_budget];
    Eigen::MatrixXd J(prob.nu(), nx);
    bool ok = true;
    for (int j = 0; j < nx && ok; ++j) {
      Eigen::VectorXd xp = s.x, xm = s.x;
      xp(j) += h;
      xm(j) -= h;
      auto ep = solver.solve(xp);
      auto em = solver.solve(xm);
      if (!ep.feasible || !em.feasible) { ok = false; break; }
      J.col(j) = (ep.u - em.u) / (2.0 * h);
    }
    if (ok) lu_raw = std::max(lu_raw, spectral_norm(J));
  }
  if (lu_raw == 0.0)
    throw NumericError("estimate_constants: Lipschitz sampling failed");
  c.L_u = safety * lu_raw;

  // State-dependent Lipschitz modulus of the value function over pairs.
  Rng pair_rng(seed, 0xC0ull);
  const size_t n_pairs = 20 * members.size();
  double c0_raw = 0.0;
  for (size_t k = 0; k < n_pairs; ++k) {
    const auto& a = *members[pair_rng.uniform_int(members.size())];
    const auto& b = *members[pair_rng.uniform_int(members.size())];
    const double dist = (a.x - b.x).norm();
    const double mx = std::max(a.x.norm(), b.x.norm());
    if (dist < 1e-9 || mx < 1e-9) continue;
    c0_raw = std::max(c0_raw, std::abs(a.v - b.v) / (mx * dist));
  }
  c.c0 = safety * c0_raw;

  const double nA = spectral_norm(prob.A);
  const double nB = spectral_norm(prob.B);
  c.c4 = c.c0 * (nA + c.L_u * nB) * nB;
  c.c5 = c.c0 * nB * nB;
  c.c6 = c6_closed_form(c.c1, c.c2, c.c3, c.c4, c.c5);
  c.c7 = c7_closed_form(c.c1, c.c2, c.c3, c.c4, c.c5);

  const double dU = geometry::inradius(prob.U);
  const double DU = geometry::radius(prob.U);
  c.delta_bar = std::min(c.c7 * dU * std::sqrt(c.gamma) / (2.0 * DU), dU);

  c.c8 = 0.9 *
         (-c.c4 + std::sqrt(c.c4 * c.c4 + 4.0 * c.c5 * c.c1 * c.c3 / c.c2)) /
         (2.0 * c.c5);
  if (!(c.c8 > 0.0))
    throw CertificationError(
        "estimate_constants: no positive state-proportional error rate exists");
  return c;
}

// Fixed point of a(x) = (1 - c3/c2)x + c4 sqrt(x/c1) delta + c5 delta^2:
// solving the quadratic in sqrt(x) gives a_inf = c6 delta^2 with
// c6 = c2 (c2 c4^2 + 2 c1 c3 c5 + c4 sqrt(c2 (c2 c4^2 + 4 c1 c3 c5))) /
//      (2 c1 c3^2), which also equals 1/c7^2.
double c6_closed_form(double c1, double c2, double c3, double c4, double c5) {
  return c2 *
         (c2 * c4 * c4 + 2.0 * c1 * c3 * c5 +
          c4 * std::sqrt(c2 * (c2 * c4 * c4 + 4.0 * c1 * c3 * c5))) /
         (2.0 * c1 * c3 * c3);
}

double c7_closed_form(double c1, double c2, double c3, double c4, double c5) {
  return (std::sqrt(c4 * c4 + 4.0 * c1 * c3 * c5 / c2) - c4) /
         (2.0 * c5 * std::sqrt(c1));
}

bool in_sublevel(const MpcSolver& solver, const Constants& c,
                 const Eigen::VectorXd& x) {
  auto ev = solver.solve(x);
  return ev.feasible && ev.v <= c.gamma;
}

}  // namespace mpcnn::mpc
