#include "mpcnn/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "mpcnn/errors.hpp"
#include "mpcnn/qp.hpp"

namespace mpcnn::geometry {

namespace {

Eigen::VectorXd row_norms(const Eigen::MatrixXd& H) {
  return H.rowwise().norm();
}

// Projection of p onto the recession cone {u : Hu <= 0}.
Eigen::VectorXd project_cone(const Eigen::MatrixXd& H, const Eigen::VectorXd& p) {
  qp::QpData q;
  const int n = static_cast<int>(H.cols());
  q.H = Eigen::MatrixXd::Identity(n, n);
  q.g = -p;
  q.A = H;
  q.b = Eigen::VectorXd::Zero(H.rows());
  auto sol = qp::solve_qp(q);
  if (sol.status != qp::QpStatus::optimal)
    throw NumericError("recession cone projection did not converge");
  return sol.z;
}

}  // namespace

Polytope::Polytope(Eigen::MatrixXd H_in, Eigen::VectorXd h_in)
    : H(std::move(H_in)), h(std::move(h_in)) {
  if (H.rows() == 0 || H.cols() == 0)
    throw ValidationError("polytope: empty H matrix");
  if (h.size() != H.rows())
    throw ValidationError("polytope: H/h row count mismatch");
  if (!H.allFinite() || !h.allFinite())
    throw ValidationError("polytope: non-finite entries");
  const Eigen::VectorXd rn = row_norms(H);
  for (int i = 0; i < H.rows(); ++i) {
    if (rn(i) < 1e-12)
      throw ValidationError("polytope: zero row in H");
    if (h(i) <= 0.0)
      throw ValidationError("polytope: origin not strictly interior (h_i <= 0)");
  }
  // Bounded iff the recession cone {u : Hu <= 0} is {0}, which holds iff all
  // +-e_i project to 0 on the cone (the polar cone then spans R^n).
  const int n = dim();
  for (int i = 0; i < n; ++i) {
    for (double s : {1.0, -1.0}) {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
      p(i) = s;
      if (project_cone(H, p).norm() > 1e-9)
        throw ValidationError("polytope: unbounded (nontrivial recession cone)");
    }
  }
}

Polytope Polytope::box(int dim, double half_width) {
  return box(Eigen::VectorXd::Constant(dim, half_width));
}

Polytope Polytope::box(const Eigen::VectorXd& half_widths) {
  const int n = static_cast<int>(half_widths.size());
  Eigen::MatrixXd H(2 * n, n);
  H.setZero();
  Eigen::VectorXd h(2 * n);
  for (int i = 0; i < n; ++i) {
    H(2 * i, i) = 1.0;
    H(2 * i + 1, i) = -1.0;
    h(2 * i) = half_widths(i);
    h(2 * i + 1) = half_widths(i);
  }
  return Polytope(H, h);
}

double inradius(const Polytope& p) {
  return (p.h.array() / row_norms(p.H).array()).minCoeff();
}

std::vector<Eigen::VectorXd> vertices(const Polytope& p) {
  const int n = p.dim();
  const int m = p.rows();
  if (n > 4)
    throw ValidationError("vertices: dimension > 4 unsupported");
  std::vector<Eigen::VectorXd> out;
  std::vector<int> idx(n);
  const double tol = 1e-9 * std::max(1.0, p.h.cwiseAbs().maxCoeff());

  // Iterate over all n-subsets of rows.
  std::vector<int> comb(n);
  for (int i = 0; i < n; ++i) comb[i] = i;
  auto advance = [&]() {
    int i = n - 1;
    while (i >= 0 && comb[i] == m - n + i) --i;
    if (i < 0) return false;
    ++comb[i];
    for (int j = i + 1; j < n; ++j) comb[j] = comb[j - 1] + 1;
    return true;
  };
  if (m < n) return out;
  do {
    Eigen::MatrixXd S(n, n);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      S.row(i) = p.H.row(comb[i]);
      r(i) = p.h(comb[i]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    lu.setThreshold(1e-10);
    if (lu.rank() < n) continue;
    Eigen::VectorXd v = lu.solve(r);
    if (((p.H * v - p.h).array() > tol).any()) continue;
    bool dup = false;
    for (const auto& w : out)
      if ((w - v).norm() < 1e-9 * std::max(1.0, v.norm())) { dup = true; break; }
    if (!dup) out.push_back(v);
  } while (advance());
  return out;
}

double radius(const Polytope& p) {
  auto vs = vertices(p);
  if (vs.empty())
    throw NumericError("radius: no vertices found");
  double best = 0.0;
  for (const auto& v : vs) best = std::max(best, v.norm());
  return best;
}

Polytope tighten(const Polytope& p, double eps) {
  if (eps < 0.0)
    throw ValidationError("tighten: negative radius");
  if (eps >= inradius(p))
    throw ValidationError("tighten: eps >= inradius, empty interior");
  return Polytope(p.H, p.h - eps * row_norms(p.H));
}

Eigen::VectorXd project(const Polytope& p, const Eigen::VectorXd& z) {
  if (z.size() != p.dim())
    throw ValidationError("project: dimension mismatch");
  if (((p.H * z - p.h).array() <= 0.0).all())
    return z;
  qp::QpData q;
  q.H = Eigen::MatrixXd::Identity(p.dim(), p.dim());
  q.g = -z;
  q.A = p.H;
  q.b = p.h;
  auto sol = qp::solve_qp(q);
  if (sol.status != qp::QpStatus::optimal)
    throw NumericError("project: QP did not converge after " +
                       std::to_string(sol.iterations) + " iterations");
  return sol.z;
}

double max_projection_distance(const Polytope& p, double eps) {
  if (eps == 0.0) return 0.0;
  const Polytope inner = tighten(p, eps);
  double best = 0.0;
  for (const auto& v : vertices(p))
    best = std::max(best, (v - project(inner, v)).norm());
  return best;
}

bool contains(const Polytope& p, const Eigen::VectorXd& z, double tol) {
  if (z.size() != p.dim())
    throw ValidationError("contains: dimension mismatch");
  return ((p.H * z - p.h).array() <= tol * row_norms(p.H).array()).all();
}

double support(const Polytope& p, const Eigen::VectorXd& c) {
  if (c.size() != p.dim())
    throw ValidationError("support: dimension mismatch");
  const double cn = c.norm();
  if (cn < 1e-300) return 0.0;
  const Eigen::VectorXd dir = c / cn;
  // argmax c'u equals the limit of projecting t*dir as t grows; the value
  // error of one projection at finite t is at most D(P)^2 / (2t).
  double t = 1e6 * std::max(1.0, p.h.cwiseAbs().maxCoeff());
  Eigen::VectorXd u = project(p, t * dir);
  t = std::max(t, 1e10 * (u.norm() + 1.0) * (u.norm() + 1.0));
  u = project(p, t * dir);
  return cn * dir.dot(u);
}

bool halfspace_intersects(const Polytope& p, const Eigen::VectorXd& c, double d,
                          double tol) {
  qp::QpData q;
  const int n = p.dim();
  q.H = Eigen::MatrixXd::Identity(n, n);
  q.g = Eigen::VectorXd::Zero(n);
  q.A.resize(p.rows() + 1, n);
  q.A.topRows(p.rows()) = p.H;
  q.A.bottomRows(1) = -c.transpose();
  q.b.resize(p.rows() + 1);
  q.b.head(p.rows()) = p.h;
  q.b(p.rows()) = -(d - tol);
  auto sol = qp::solve_qp(q);
  return sol.status != qp::QpStatus::infeasible;
}

}  // namespace mpcnn::geometry
