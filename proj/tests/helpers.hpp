#pragma once

#include <Eigen/Dense>

#include "mpcnn/geometry.hpp"
#include "mpcnn/mpc.hpp"
#include "mpcnn/rng.hpp"

namespace testutil {

/// Double-integrator bench problem used across the suite.
inline mpcnn::mpc::MpcProblem desk_problem() {
  mpcnn::mpc::MpcProblem p;
  p.A.resize(2, 2);
  p.A << 1, 1, 0, 1;
  p.B.resize(2, 1);
  p.B << 0.5, 1;
  p.Q = Eigen::MatrixXd::Identity(2, 2);
  p.R = Eigen::MatrixXd::Identity(1, 1);
  p.horizon = 5;
  p.X = mpcnn::geometry::Polytope::box(2, 5.0);
  p.U = mpcnn::geometry::Polytope::box(1, 1.0);
  p.P = mpcnn::mpc::dare(p.A, p.B, p.Q, p.R);
  p.Xf = mpcnn::mpc::terminal_set(p);
  return p;
}

/// Random bounded C-polytope: a sandbox box plus random extra halfspaces with
/// positive offsets.
inline mpcnn::geometry::Polytope random_polytope(mpcnn::Rng& rng, int dim,
                                                 int extra_rows) {
  Eigen::MatrixXd H(2 * dim + extra_rows, dim);
  Eigen::VectorXd h(2 * dim + extra_rows);
  for (int i = 0; i < dim; ++i) {
    H.row(2 * i).setZero();
    H.row(2 * i + 1).setZero();
    H(2 * i, i) = 1.0;
    H(2 * i + 1, i) = -1.0;
    h(2 * i) = rng.uniform(0.5, 3.0);
    h(2 * i + 1) = rng.uniform(0.5, 3.0);
  }
  for (int r = 0; r < extra_rows; ++r) {
    Eigen::VectorXd dir(dim);
    for (int i = 0; i < dim; ++i) dir(i) = rng.normal();
    if (dir.norm() < 1e-6) dir(0) = 1.0;
    H.row(2 * dim + r) = dir.transpose() / dir.norm();
    h(2 * dim + r) = rng.uniform(0.5, 3.0);
  }
  return {H, h};
}

inline Eigen::VectorXd random_vector(mpcnn::Rng& rng, int dim, double scale) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = scale * rng.normal();
  return v;
}

}  // namespace testutil
