#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mpcnn/mpc.hpp"

namespace mpcnn::bounds {

struct FeasiblePair {
  std::int64_t n_w_prime;
  std::int64_t n_d_prime;
};

struct Architecture {
  std::int64_t n_w;
  std::int64_t n_d;
};

/// Right-hand side of the uniform-regime complexity inequality:
/// (524 sqrt(nx*nu) D(U) D(Xinv) L_u / (delta1 d(U)))^nx.
/// Returned in linear scale; log10 is always exact via the second output.
double theorem1_rhs(double delta1, int n_x, int n_u, double D_U, double d_U,
                    double D_Xinv, double L_u, double delta_bar,
                    double* log10_rhs = nullptr);

/// For each width 1..max_width_prime, the smallest depth n_d' satisfying
/// n_w'^2 n_d'^2 log3(n_w'+2) >= rhs. Minimality is exact: the predicate is
/// re-evaluated at n_d' and n_d'-1.
std::vector<FeasiblePair> feasible_pairs(double rhs, std::int64_t max_width_prime);

/// The abstract pair inequality itself, shared with tests.
bool pair_satisfies(std::int64_t n_w_prime, std::int64_t n_d_prime, double rhs);

/// Realized network size: n_w = n_u 3^{nx+3} max{nx*floor(n_w'^{1/nx}), n_w'+2},
/// n_d = 11 n_d' + 19 + 2 nx. Integer roots computed exactly.
Architecture realized_architecture(std::int64_t n_w_prime, std::int64_t n_d_prime,
                                   int n_x, int n_u);

/// floor(v^{1/k}) in exact integer arithmetic.
std::int64_t integer_root(std::int64_t v, int k);

struct Theorem2Result {
  double rhs;
  double log10_rhs;
  double delta_lo;
  double D2;
};

/// Non-uniform-regime complexity RHS for a target invariant set of inradius
/// d_target: delta_lo = min{delta_bar, sqrt(c1/c6) d_target},
/// D2 = D(Xinv) + (2 delta_bar / c8) ln(delta_bar/delta_lo), and the pair
/// inequality uses delta_bar in the denominator.
Theorem2Result theorem2_rhs(const mpc::Constants& c, int n_x, int n_u,
                            double D_U, double d_U, double d_target);

/// Sup error rate of the underlying width/depth construction:
/// 131 sqrt(nx) L_f (N'^2 L'^2 log3(N'+2))^{-1/nx}.
double shen_error(std::int64_t N_prime, std::int64_t L_prime, int n_x,
                  double lipschitz_modulus);

/// Affine map from the centered cube of half width D_Xinv onto [0,1]^nx.
Eigen::VectorXd to_unit_cube(const Eigen::VectorXd& x, double D_Xinv);
/// Its inverse: y in [0,1]^nx back to the centered cube.
Eigen::VectorXd from_unit_cube(const Eigen::VectorXd& y, double D_Xinv);

}  // namespace mpcnn::bounds
