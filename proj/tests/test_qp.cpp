#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mpcnn/errors.hpp"
#include "mpcnn/qp.hpp"
#include "mpcnn/rng.hpp"

using namespace mpcnn;

namespace {

// Independent oracle: projected gradient ascent on the dual
//   max -1/2 lam' M lam - d' lam  s.t. lam >= 0,
// with M = A H^-1 A', d = A H^-1 g + b, then z = -H^-1 (g + A' lam).
Eigen::VectorXd dual_pgd_oracle(const qp::QpData& q, int iters = 200000) {
  const Eigen::MatrixXd Hinv = q.H.inverse();
  const Eigen::MatrixXd M = q.A * Hinv * q.A.transpose();
  const Eigen::VectorXd d = q.A * Hinv * q.g + q.b;
  const double L =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();
  const double step = 1.0 / std::max(L, 1e-12);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(q.A.rows());
  for (int k = 0; k < iters; ++k)
    lam = (lam - step * (M * lam + d)).cwiseMax(0.0);
  return -Hinv * (q.g + q.A.transpose() * lam);
}

}  // namespace

TEST_CASE("scalar QP with one active constraint") {
  qp::QpData q;
  q.H = Eigen::MatrixXd::Constant(1, 1, 2.0);  // objective z^2
  q.g = Eigen::VectorXd::Zero(1);
  q.A = Eigen::MatrixXd::Constant(1, 1, -1.0);  // z >= 1
  q.b = Eigen::VectorXd::Constant(1, -1.0);
  const auto s = qp::solve_qp(q);
  REQUIRE(s.status == qp::QpStatus::optimal);
  CHECK(s.z(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(s.duals(0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(s.objective == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("box clamp") {
  qp::QpData q;
  q.H = 2.0 * Eigen::MatrixXd::Identity(2, 2);  // ||z - (1,1)||^2
  q.g = -2.0 * Eigen::Vector2d(1, 1);
  q.A.resize(4, 2);
  q.A << 1, 0, -1, 0, 0, 1, 0, -1;
  q.b = Eigen::VectorXd::Constant(4, 0.4);
  const auto s = qp::solve_qp(q);
  REQUIRE(s.status == qp::QpStatus::optimal);
  CHECK(s.z.isApprox(Eigen::Vector2d(0.4, 0.4), 1e-9));
}

TEST_CASE("rejects indefinite Hessian") {
  qp::QpData q;
  q.H.resize(2, 2);
  q.H << 1, 0, 0, -1;
  q.g = Eigen::VectorXd::Zero(2);
  q.A.resize(0, 2);
  q.b.resize(0);
  CHECK_THROWS_AS(qp::solve_qp(q), ValidationError);
}

TEST_CASE("random instances match the dual projected-gradient oracle") {
  Rng rng(21, 0);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform_int(6));
    const int m = 1 + static_cast<int>(rng.uniform_int(12));
    Eigen::MatrixXd W(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) W(i, j) = rng.normal();
    qp::QpData q;
    q.H = W * W.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
    q.g = testutil::random_vector(rng, n, 1.0);
    q.A.resize(m, n);
    for (int i = 0; i < m; ++i)
      q.A.row(i) = testutil::random_vector(rng, n, 1.0).transpose();
    q.b = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) q.b(i) = rng.uniform(0.2, 2.0);  // feasible at 0

    const auto s = qp::solve_qp(q);
    REQUIRE(s.status == qp::QpStatus::optimal);
    const auto z_oracle = dual_pgd_oracle(q);
    CHECK((s.z - z_oracle).norm() <= 1e-6);

    // KKT block.
    CHECK(((q.A * s.z - q.b).array() <= 1e-8).all());
    CHECK((s.duals.array() >= 0.0).all());
    CHECK((q.H * s.z + q.g + q.A.transpose() * s.duals).norm() <= 1e-8);
    CHECK(s.duals.cwiseProduct(q.A * s.z - q.b).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("objective beats a feasible sample cloud") {
  Rng rng(22, 0);
  qp::QpData q;
  q.H = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  q.g = Eigen::Vector3d(1, -2, 0.5);
  q.A.resize(6, 3);
  q.A << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  q.b = Eigen::VectorXd::Constant(6, 1.0);
  const auto s = qp::solve_qp(q);
  REQUIRE(s.status == qp::QpStatus::optimal);
  for (int t = 0; t < 10000; ++t) {
    Eigen::Vector3d z;
    for (int i = 0; i < 3; ++i) z(i) = rng.uniform(-1.0, 1.0);
    const double obj = 0.5 * z.dot(q.H * z) + q.g.dot(z);
    CHECK(s.objective <= obj + 1e-12);
  }
}

TEST_CASE("warm start returns the same optimum") {
  Rng rng(23, 0);
  for (int t = 0; t < 20; ++t) {
    qp::QpData q;
    q.H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    q.g = testutil::random_vector(rng, 2, 2.0);
    q.A.resize(4, 2);
    q.A << 1, 0, -1, 0, 0, 1, 0, -1;
    q.b = Eigen::VectorXd::Constant(4, 0.7);
    const auto cold = qp::solve_qp(q);
    REQUIRE(cold.status == qp::QpStatus::optimal);
    const auto warm = qp::solve_qp(q, cold.z);
    REQUIRE(warm.status == qp::QpStatus::optimal);
    CHECK((cold.z - warm.z).norm() <= 1e-9);
  }
}

TEST_CASE("infeasible system yields a Farkas certificate") {
  qp::QpData q;
  q.H = 2.0 * Eigen::MatrixXd::Identity(1, 1);
  q.g = Eigen::VectorXd::Zero(1);
  q.A.resize(2, 1);
  q.A << 1, -1;  // z <= -1 and z >= 1
  q.b.resize(2);
  q.b << -1, -1;
  const auto s = qp::solve_qp(q);
  REQUIRE(s.status == qp::QpStatus::infeasible);
  REQUIRE(s.farkas_ray.size() == 2);
  CHECK((s.farkas_ray.array() >= 0.0).all());
  CHECK((q.A.transpose() * s.farkas_ray).norm() <=
        1e-6 * s.farkas_ray.norm());
  CHECK(q.b.dot(s.farkas_ray) < 0.0);
}

TEST_CASE("unconstrained problem") {
  qp::QpData q;
  q.H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  q.g = Eigen::Vector2d(-2, 4);
  q.A.resize(0, 2);
  q.b.resize(0);
  const auto s = qp::solve_qp(q);
  REQUIRE(s.status == qp::QpStatus::optimal);
  CHECK(s.z.isApprox(Eigen::Vector2d(1, -2), 1e-12));
}
