#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mpcnn::geometry {

/// H-representation C-set {u : Hu <= h}. Validated on construction:
/// origin strictly interior (h > 0), no zero rows, bounded.
struct Polytope {
  Eigen::MatrixXd H;
  Eigen::VectorXd h;

  Polytope() = default;
  Polytope(Eigen::MatrixXd H_in, Eigen::VectorXd h_in);

  int dim() const { return static_cast<int>(H.cols()); }
  int rows() const { return static_cast<int>(H.rows()); }

  /// Axis-aligned box {|u_i| <= half_width}.
  static Polytope box(int dim, double half_width);
  /// Box with per-axis half widths.
  static Polytope box(const Eigen::VectorXd& half_widths);
};

/// d(P) = min_i h_i / ||H_i||, the largest ball around the origin inside P.
double inradius(const Polytope& p);

/// D(P) = max vertex norm. Vertex enumeration by active subsets; dim <= 4.
double radius(const Polytope& p);

/// All vertices of P via (m choose n) subsystem enumeration; dim <= 4.
std::vector<Eigen::VectorXd> vertices(const Polytope& p);

/// Pontryagin difference with the Euclidean ball B(eps):
/// {u : Hu <= h - eps*rownorms(H)}. Requires eps < inradius(p).
Polytope tighten(const Polytope& p, double eps);

/// Euclidean projection onto P (KKT residual <= 1e-9). Returns z when z in P.
Eigen::VectorXd project(const Polytope& p, const Eigen::VectorXd& z);

/// r(P, eps) = max over u in P of dist(u, tighten(P, eps)). The distance to a
/// convex set is convex in u, so the max is attained at a vertex; dim <= 4.
double max_projection_distance(const Polytope& p, double eps);

/// Hz <= h + tol*rownorms(H) elementwise.
bool contains(const Polytope& p, const Eigen::VectorXd& z, double tol);

/// Support value max_{u in P} c'u, computed by projecting a far point along c.
double support(const Polytope& p, const Eigen::VectorXd& c);

/// True iff {u in P : c'u >= d} is nonempty (up to tol). Used for redundancy
/// elimination in invariant-set iteration.
bool halfspace_intersects(const Polytope& p, const Eigen::VectorXd& c, double d,
                          double tol);

}  // namespace mpcnn::geometry
