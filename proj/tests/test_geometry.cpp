#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mpcnn/errors.hpp"
#include "mpcnn/geometry.hpp"
#include "mpcnn/rng.hpp"

using namespace mpcnn;
namespace geo = mpcnn::geometry;

TEST_CASE("polytope construction rejects invalid input") {
  Eigen::MatrixXd H(2, 1);
  H << 1, -1;
  Eigen::VectorXd h(2);
  h << 1, 1;
  CHECK_NOTHROW(geo::Polytope(H, h));

  h(1) = 0.0;  // origin on the boundary
  CHECK_THROWS_AS(geo::Polytope(H, h), ValidationError);

  Eigen::MatrixXd Hz(2, 2);
  Hz << 1, 0, 0, 0;
  Eigen::VectorXd hz = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(geo::Polytope(Hz, hz), ValidationError);

  // Half-plane: unbounded.
  Eigen::MatrixXd Hu(1, 2);
  Hu << 1, 0;
  Eigen::VectorXd hu = Eigen::VectorXd::Ones(1);
  CHECK_THROWS_AS(geo::Polytope(Hu, hu), ValidationError);
}

TEST_CASE("inradius") {
  CHECK(geo::inradius(geo::Polytope::box(3, 0.5)) == doctest::Approx(0.5));
  CHECK(geo::inradius(geo::Polytope::box(1, 1.0)) == doctest::Approx(1.0));

  Eigen::MatrixXd H(3, 2);
  H << 1, 1, -1, 0, 0, -1;
  Eigen::VectorXd h = Eigen::VectorXd::Ones(3);
  CHECK(geo::inradius(geo::Polytope(H, h)) ==
        doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("radius via vertex enumeration") {
  CHECK(geo::radius(geo::Polytope::box(3, 0.5)) ==
        doctest::Approx(0.5 * std::sqrt(3.0)));
  CHECK(geo::radius(geo::Polytope::box(1, 1.0)) == doctest::Approx(1.0));

  Eigen::MatrixXd H(3, 2);
  H << 1, 0, 0, 1, -1, -1;
  Eigen::VectorXd h = Eigen::VectorXd::Ones(3);
  CHECK(geo::radius(geo::Polytope(H, h)) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("tighten") {
  const auto box = geo::Polytope::box(3, 0.5);
  const auto t = geo::tighten(box, 0.1);
  CHECK(t.h.isApprox(Eigen::VectorXd::Constant(6, 0.4)));
  CHECK(geo::tighten(box, 0.0).h.isApprox(box.h));
  CHECK_THROWS_AS(geo::tighten(box, 0.5), ValidationError);

  // Composition is exact row-wise.
  const auto t2 = geo::tighten(geo::tighten(box, 0.1), 0.2);
  const auto t3 = geo::tighten(box, 0.3);
  CHECK(t2.h.isApprox(t3.h, 1e-15));
}

TEST_CASE("project") {
  const auto box = geo::Polytope::box(3, 0.4);
  Eigen::Vector3d z(1, 0, 0);
  CHECK(geo::project(box, z).isApprox(Eigen::Vector3d(0.4, 0, 0), 1e-9));

  Eigen::Vector3d interior(0.1, -0.2, 0.3);
  CHECK(geo::project(box, interior) == interior);

  const auto box2 = geo::Polytope::box(2, 0.4);
  CHECK(geo::project(box2, Eigen::Vector2d(1, 1))
            .isApprox(Eigen::Vector2d(0.4, 0.4), 1e-9));
}

TEST_CASE("projection is idempotent and non-expansive") {
  Rng rng(11, 0);
  for (int t = 0; t < 200; ++t) {
    const int dim = 1 + static_cast<int>(rng.uniform_int(3));
    const auto p = testutil::random_polytope(rng, dim, 3);
    const auto a = testutil::random_vector(rng, dim, 4.0);
    const auto b = testutil::random_vector(rng, dim, 4.0);
    const auto pa = geo::project(p, a);
    const auto pb = geo::project(p, b);
    CHECK(geo::contains(p, pa, 1e-8));
    CHECK((geo::project(p, pa) - pa).norm() <= 1e-9);
    CHECK((pa - pb).norm() <= (a - b).norm() + 1e-9);
  }
}

TEST_CASE("max projection distance on the box") {
  const auto box = geo::Polytope::box(3, 0.5);
  CHECK(geo::max_projection_distance(box, 0.1) ==
        doctest::Approx(0.1 * std::sqrt(3.0)));
  CHECK(geo::max_projection_distance(box, 0.0) == 0.0);
  // Sandwich is tight for the cube: eps * D/d = eps * sqrt(3).
  const double r = geo::max_projection_distance(box, 0.1);
  CHECK(0.1 <= r + 1e-12);
  CHECK(r <= 0.1 * geo::radius(box) / geo::inradius(box) + 1e-12);
}

TEST_CASE("projection distance sandwich on random polytopes") {
  Rng rng(12, 0);
  int checked = 0;
  while (checked < 1000) {
    const int dim = 1 + static_cast<int>(rng.uniform_int(3));
    const auto p = testutil::random_polytope(rng, dim, dim);
    const double d = geo::inradius(p);
    const double D = geo::radius(p);
    const double eps = rng.uniform(1e-3, 0.99) * d;
    const double r = geo::max_projection_distance(p, eps);
    CHECK(eps <= r * (1 + 1e-9) + 1e-12);
    CHECK(r <= eps * D / d * (1 + 1e-9) + 1e-12);
    ++checked;
  }
}

TEST_CASE("projection distance grows at least linearly") {
  Rng rng(13, 0);
  for (int t = 0; t < 100; ++t) {
    const int dim = 1 + static_cast<int>(rng.uniform_int(3));
    const auto p = testutil::random_polytope(rng, dim, 2);
    const double d = geo::inradius(p);
    const double e2 = rng.uniform(0.1, 0.9) * d;
    const double e1 = rng.uniform(0.05, 0.95) * e2;
    const double r1 = geo::max_projection_distance(p, e1);
    const double r2 = geo::max_projection_distance(p, e2);
    CHECK(r1 + (e2 - e1) <= r2 * (1 + 1e-9) + 1e-9);
  }
}

TEST_CASE("contains tolerance semantics") {
  const auto box = geo::Polytope::box(1, 1.0);
  CHECK(geo::contains(box, Eigen::VectorXd::Zero(1), 0.0));
  Eigen::VectorXd z(1);
  z << 1.000000001;
  CHECK(geo::contains(box, z, 1e-8));
  z << 1.1;
  CHECK(!geo::contains(box, z, 1e-8));
}

TEST_CASE("tighten keeps the origin interior") {
  Rng rng(14, 0);
  for (int t = 0; t < 100; ++t) {
    const int dim = 1 + static_cast<int>(rng.uniform_int(3));
    const auto p = testutil::random_polytope(rng, dim, 2);
    const double eps = rng.uniform(0.0, 0.99) * geo::inradius(p);
    const auto tp = geo::tighten(p, eps);
    CHECK(geo::contains(tp, Eigen::VectorXd::Zero(dim), 0.0));
    CHECK(geo::inradius(tp) == doctest::Approx(geo::inradius(p) - eps));
  }
}

TEST_CASE("support function on boxes") {
  const auto box = geo::Polytope::box(2, 2.0);
  Eigen::Vector2d e1(1, 0);
  CHECK(geo::support(box, e1) == doctest::Approx(2.0).epsilon(1e-6));
  Eigen::Vector2d diag(1, 1);
  CHECK(geo::support(box, diag) == doctest::Approx(4.0).epsilon(1e-6));
}
