#include "mpcnn/bounds.hpp"

#include <cmath>
#include <limits>

#include "mpcnn/errors.hpp"

namespace mpcnn::bounds {

namespace {

double log3(double v) { return std::log(v) / std::log(3.0); }

double from_log10(double l10) {
  if (l10 > 300.0) return std::numeric_limits<double>::infinity();
  return std::pow(10.0, l10);
}

}  // namespace

double theorem1_rhs(double delta1, int n_x, int n_u, double D_U, double d_U,
                    double D_Xinv, double L_u, double delta_bar,
                    double* log10_rhs) {
  if (delta1 <= 0.0 || n_x < 1 || n_u < 1 || D_U <= 0.0 || d_U <= 0.0 ||
      D_Xinv <= 0.0 || L_u <= 0.0)
    throw ValidationError("theorem1_rhs: inputs must be positive");
  if (delta1 > delta_bar)
    throw CertificationError("theorem1_rhs: delta1 exceeds the admissible bound");
  const double base =
      524.0 * std::sqrt(double(n_x) * double(n_u)) * D_U * D_Xinv * L_u /
      (delta1 * d_U);
  const double l10 = n_x * std::log10(base);
  if (log10_rhs) *log10_rhs = l10;
  return from_log10(l10);
}

bool pair_satisfies(std::int64_t wp, std::int64_t dp, double rhs) {
  if (wp < 1 || dp < 1) return false;
  const double lhs_log =
      2.0 * std::log10(double(wp)) + 2.0 * std::log10(double(dp)) +
      std::log10(log3(double(wp) + 2.0));
  if (std::isinf(rhs)) return false;
  return double(wp) * double(wp) * double(dp) * double(dp) *
             log3(double(wp) + 2.0) >= rhs ||
         lhs_log >= std::log10(rhs);
}

std::vector<FeasiblePair> feasible_pairs(double rhs, std::int64_t max_width_prime) {
  if (!(rhs > 0.0))
    throw ValidationError("feasible_pairs: rhs must be positive");
  std::vector<FeasiblePair> out;
  for (std::int64_t wp = 1; wp <= max_width_prime; ++wp) {
    const double need = rhs / (double(wp) * double(wp) * log3(double(wp) + 2.0));
    if (!std::isfinite(need)) continue;
    auto dp = static_cast<std::int64_t>(std::floor(std::sqrt(std::max(need, 0.0))));
    if (dp < 1) dp = 1;
    // Settle floating-point edge cases against the predicate itself.
    while (dp > 1 && pair_satisfies(wp, dp - 1, rhs)) --dp;
    while (!pair_satisfies(wp, dp, rhs)) ++dp;
    out.push_back({wp, dp});
  }
  return out;
}

std::int64_t integer_root(std::int64_t v, int k) {
  if (v < 0 || k < 1) throw ValidationError("integer_root: bad arguments");
  if (v == 0) return 0;
  std::int64_t lo = 1, hi = v;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo + 1) / 2;
    // Does mid^k <= v, with overflow guard?
    std::int64_t acc = 1;
    bool over = false;
    for (int i = 0; i < k; ++i) {
      if (acc > v / mid) { over = true; break; }
      acc *= mid;
    }
    if (!over && acc <= v) lo = mid; else hi = mid - 1;
  }
  return lo;
}

Architecture realized_architecture(std::int64_t wp, std::int64_t dp, int n_x,
                                   int n_u) {
  if (wp < 1 || dp < 1 || n_x < 1 || n_u < 1)
    throw ValidationError("realized_architecture: arguments must be positive");
  std::int64_t pow3 = 1;
  for (int i = 0; i < n_x + 3; ++i) pow3 *= 3;
  const std::int64_t root = integer_root(wp, n_x);
  const std::int64_t inner = std::max<std::int64_t>(n_x * root, wp + 2);
  return {n_u * pow3 * inner, 11 * dp + 19 + 2 * n_x};
}

Theorem2Result theorem2_rhs(const mpc::Constants& c, int n_x, int n_u,
                            double D_U, double d_U, double d_target) {
  if (!(d_target > 0.0))
    throw ValidationError("theorem2_rhs: target inradius must be positive");
  Theorem2Result r;
  r.delta_lo = std::min(c.delta_bar, std::sqrt(c.c1 / c.c6) * d_target);
  r.D2 = c.D_Xinv + (2.0 * c.delta_bar / c.c8) * std::log(c.delta_bar / r.delta_lo);
  const double base =
      524.0 * std::sqrt(double(n_x) * double(n_u)) * D_U * r.D2 * c.L_u /
      (c.delta_bar * d_U);
  r.log10_rhs = n_x * std::log10(base);
  r.rhs = from_log10(r.log10_rhs);
  return r;
}

double shen_error(std::int64_t N_prime, std::int64_t L_prime, int n_x,
                  double lipschitz_modulus) {
  if (N_prime < 1 || L_prime < 1 || n_x < 1)
    throw ValidationError("shen_error: arguments must be positive");
  const double cap = double(N_prime) * double(N_prime) * double(L_prime) *
                     double(L_prime) * log3(double(N_prime) + 2.0);
  return 131.0 * std::sqrt(double(n_x)) * lipschitz_modulus *
         std::pow(cap, -1.0 / double(n_x));
}

Eigen::VectorXd to_unit_cube(const Eigen::VectorXd& x, double D_Xinv) {
  if (x.lpNorm<Eigen::Infinity>() > D_Xinv * (1.0 + 1e-12))
    throw ValidationError("to_unit_cube: input outside the centered cube");
  return (x / (2.0 * D_Xinv)).array() + 0.5;
}

Eigen::VectorXd from_unit_cube(const Eigen::VectorXd& y, double D_Xinv) {
  return 2.0 * D_Xinv * (y.array() - 0.5);
}

}  // namespace mpcnn::bounds
