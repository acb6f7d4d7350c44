#include "mpcnn/qp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mpcnn/errors.hpp"

namespace mpcnn::qp {

namespace {

// Minimizes 1/2 ||(Az - b)_+||^2 by semismooth Newton. Returns true with the
// minimizer if the system Az <= b is feasible (minimum ~ 0); otherwise false,
// with lambda = (Az* - b)_+ as a Farkas ray (A'lambda = 0, b'lambda < 0).
bool feasibility_check(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                       Eigen::VectorXd* lambda_out) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale;

  for (int iter = 0; iter < 200; ++iter) {
    Eigen::VectorXd r = A * z - b;
    std::vector<int> active;
    for (int i = 0; i < m; ++i)
      if (r(i) > 0.0) active.push_back(i);
    if (active.empty()) break;

    Eigen::MatrixXd As(active.size(), n);
    Eigen::VectorXd rs(active.size());
    for (size_t k = 0; k < active.size(); ++k) {
      As.row(k) = A.row(active[k]);
      rs(k) = r(active[k]);
    }
    Eigen::MatrixXd G = As.transpose() * As;
    G.diagonal().array() += 1e-12 * std::max(1.0, G.diagonal().maxCoeff());
    Eigen::VectorXd dz = Eigen::LDLT<Eigen::MatrixXd>(G).solve(-As.transpose() * rs);
    if (dz.norm() <= 1e-14 * std::max(1.0, z.norm())) break;

    // Backtracking on the penalty value.
    const double f0 = 0.5 * r.cwiseMax(0.0).squaredNorm();
    double step = 1.0;
    for (int ls = 0; ls < 60; ++ls) {
      Eigen::VectorXd rt = A * (z + step * dz) - b;
      if (0.5 * rt.cwiseMax(0.0).squaredNorm() < f0 * (1.0 - 1e-8)) break;
      step *= 0.5;
    }
    z += step * dz;
  }

  Eigen::VectorXd lambda = (A * z - b).cwiseMax(0.0);
  if (lambda.lpNorm<Eigen::Infinity>() <= tol) return true;
  if (lambda_out) *lambda_out = lambda;
  return false;
}

}  // namespace

QpSolution solve_qp(const QpData& q, const std::optional<Eigen::VectorXd>& warm_start) {
  const int n = static_cast<int>(q.H.rows());
  const int m = static_cast<int>(q.A.rows());
  if (q.H.cols() != n || q.g.size() != n)
    throw ValidationError("solve_qp: Hessian/gradient dimension mismatch");
  if (m > 0 && (q.A.cols() != n || q.b.size() != m))
    throw ValidationError("solve_qp: constraint dimension mismatch");
  if (!q.H.isApprox(q.H.transpose(), 1e-10))
    throw ValidationError("solve_qp: Hessian not symmetric");

  Eigen::LLT<Eigen::MatrixXd> llt(q.H);
  if (llt.info() != Eigen::Success)
    throw ValidationError("solve_qp: Hessian not positive definite");
  // LLT succeeds for some semidefinite matrices; enforce the PD margin.
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.H, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-10)
      throw ValidationError("solve_qp: Hessian minimum eigenvalue <= 1e-10");
  }

  QpSolution sol;
  sol.duals = Eigen::VectorXd::Zero(m);
  const Eigen::VectorXd z_unc = llt.solve(-q.g);
  if (m == 0) {
    sol.z = z_unc;
    sol.objective = 0.5 * sol.z.dot(q.H * sol.z) + q.g.dot(sol.z);
    sol.status = QpStatus::optimal;
    return sol;
  }

  const double scale = std::max({1.0, q.b.cwiseAbs().maxCoeff(), q.g.cwiseAbs().maxCoeff()});
  const double tol = 1e-11 * scale;
  const int max_iter = 50 * (n + m);

  // Dual working set: indices with free multipliers.
  std::vector<int> P;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);

  auto primal_of = [&](const Eigen::VectorXd& lam) -> Eigen::VectorXd {
    return llt.solve(-(q.g + q.A.transpose() * lam));
  };

  // Equality solve on the working set: M_PP lam_P = -d_P with
  // M = A H^-1 A', d = A H^-1 g + b.
  auto solve_working = [&](const std::vector<int>& W) {
    const int k = static_cast<int>(W.size());
    Eigen::MatrixXd Aw(k, n);
    Eigen::VectorXd bw(k);
    for (int i = 0; i < k; ++i) {
      Aw.row(i) = q.A.row(W[i]);
      bw(i) = q.b(W[i]);
    }
    Eigen::MatrixXd HiAt = llt.solve(Aw.transpose());
    Eigen::MatrixXd M = Aw * HiAt;
    M.diagonal().array() += 1e-13 * std::max(1.0, M.diagonal().maxCoeff());
    Eigen::VectorXd d = Aw * llt.solve(q.g) + bw;
    return Eigen::VectorXd(Eigen::LDLT<Eigen::MatrixXd>(M).solve(-d));
  };

  if (warm_start && warm_start->size() == n) {
    for (int i = 0; i < m; ++i)
      if (q.A.row(i).dot(*warm_start) >= q.b(i) - tol) P.push_back(i);
    if (!P.empty()) {
      Eigen::VectorXd lam_hat = solve_working(P);
      std::vector<int> keep;
      for (size_t k = 0; k < P.size(); ++k)
        if (lam_hat(k) > 0.0) keep.push_back(P[k]);
      P = keep;
      lambda.setZero();
      if (!P.empty()) {
        lam_hat = solve_working(P);
        bool ok = true;
        for (int i = 0; i < lam_hat.size(); ++i) ok = ok && lam_hat(i) >= 0.0;
        if (ok)
          for (size_t k = 0; k < P.size(); ++k) lambda(P[k]) = lam_hat(k);
        else
          P.clear();
      }
    }
  }

  int iter = 0;
  for (; iter < max_iter; ++iter) {
    Eigen::VectorXd z = primal_of(lambda);
    Eigen::VectorXd viol = q.A * z - q.b;
    // Entering constraint: lowest violated index not already in the set.
    int enter = -1;
    for (int i = 0; i < m; ++i) {
      if (viol(i) > tol && std::find(P.begin(), P.end(), i) == P.end()) {
        enter = i;
        break;
      }
    }
    if (enter < 0) {
      sol.z = z;
      sol.duals = lambda;
      sol.objective = 0.5 * z.dot(q.H * z) + q.g.dot(z);
      sol.status = QpStatus::optimal;
      sol.iterations = iter;
      return sol;
    }
    P.push_back(enter);

    // Inner loop: restore lambda_P >= 0.
    bool inner_ok = false;
    for (int inner = 0; inner < max_iter; ++inner) {
      Eigen::VectorXd lam_hat = solve_working(P);
      bool nonneg = true;
      for (int i = 0; i < lam_hat.size(); ++i) nonneg = nonneg && lam_hat(i) >= -1e-14;
      if (nonneg) {
        lambda.setZero();
        for (size_t k = 0; k < P.size(); ++k) lambda(P[k]) = std::max(0.0, lam_hat(k));
        inner_ok = true;
        break;
      }
      // Ratio test toward lam_hat; drop the first blocking index.
      double alpha = 1.0;
      int drop = -1;
      for (size_t k = 0; k < P.size(); ++k) {
        if (lam_hat(k) < 0.0) {
          const double cur = lambda(P[k]);
          const double denom = cur - lam_hat(k);
          const double a = denom > 0.0 ? cur / denom : 0.0;
          if (a < alpha - 1e-15) {
            alpha = a;
            drop = static_cast<int>(k);
          }
        }
      }
      if (drop < 0) {
        inner_ok = true;  // numerical noise only
        lambda.setZero();
        for (size_t k = 0; k < P.size(); ++k) lambda(P[k]) = std::max(0.0, lam_hat(k));
        break;
      }
      for (size_t k = 0; k < P.size(); ++k)
        lambda(P[k]) = lambda(P[k]) + alpha * (lam_hat(k) - lambda(P[k]));
      lambda(P[drop]) = 0.0;
      P.erase(P.begin() + drop);
    }
    (void)inner_ok;

    if (lambda.lpNorm<Eigen::Infinity>() > 1e10 * scale) break;  // dual divergence
  }

  // Cap hit or multipliers diverged: decide between infeasible and max_iter.
  Eigen::VectorXd farkas;
  if (!feasibility_check(q.A, q.b, &farkas)) {
    sol.status = QpStatus::infeasible;
    sol.farkas_ray = farkas;
    sol.iterations = iter;
    sol.z = primal_of(lambda);
    sol.duals = lambda;
    return sol;
  }
  sol.status = QpStatus::max_iter;
  sol.iterations = iter;
  sol.z = primal_of(lambda);
  sol.duals = lambda;
  sol.objective = 0.5 * sol.z.dot(q.H * sol.z) + q.g.dot(sol.z);
  return sol;
}

}  // namespace mpcnn::qp
