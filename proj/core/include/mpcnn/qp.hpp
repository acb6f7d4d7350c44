#pragma once

#include <Eigen/Dense>
#include <optional>

namespace mpcnn::qp {

/// Dense strictly convex QP:  min 1/2 z'Hz + g'z  s.t.  Az <= b.
struct QpData {
  Eigen::MatrixXd H;  // n x n, symmetric positive definite
  Eigen::VectorXd g;  // n
  Eigen::MatrixXd A;  // m x n
  Eigen::VectorXd b;  // m
};

enum class QpStatus { optimal, infeasible, max_iter };

struct QpSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd duals;     // m, nonnegative at optimum
  double objective = 0.0;
  QpStatus status = QpStatus::max_iter;
  int iterations = 0;
  /// Populated when status == infeasible: lambda >= 0 with A'lambda ~ 0 and
  /// b'lambda < 0 certifying that {z : Az <= b} is empty.
  Eigen::VectorXd farkas_ray;
};

/// Dual active-set solve. Starts from the unconstrained minimizer, so no
/// feasible primal point is required. Deterministic: the lowest-index violated
/// constraint enters the working set.
QpSolution solve_qp(const QpData& q,
                    const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

}  // namespace mpcnn::qp
