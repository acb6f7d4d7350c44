#include "mpcnn/verify.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "mpcnn/errors.hpp"
#include "mpcnn/geometry.hpp"
#include "mpcnn/pipeline.hpp"
#include "mpcnn/serialize.hpp"

namespace mpcnn::verify {

namespace {

constexpr double kSlack = 1e-8;

/// Normalization with saturation: rollouts keep running when a state drifts
/// outside the training cube, so the map must not throw.
Eigen::VectorXd to_cube_clamped(const Eigen::VectorXd& x, double half_width) {
  Eigen::VectorXd y = (x / (2.0 * half_width)).array() + 0.5;
  return y.cwiseMax(0.0).cwiseMin(1.0);
}

/// Worst normalized halfspace excess, <= 0 inside.
double containment_margin(const geometry::Polytope& p,
                          const Eigen::VectorXd& z) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.rows(); ++i)
    worst = std::max(worst,
                     (p.H.row(i).dot(z) - p.h(i)) / p.H.row(i).norm());
  return worst;
}

struct StateKey {
  std::string bytes;
  bool operator==(const StateKey& o) const { return bytes == o.bytes; }
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const {
    return std::hash<std::string>()(k.bytes);
  }
};

StateKey key_of(const Eigen::VectorXd& x) {
  StateKey k;
  k.bytes.resize(sizeof(double) * x.size());
  std::memcpy(k.bytes.data(), x.data(), k.bytes.size());
  return k;
}

}  // namespace

Eigen::VectorXd Policy::operator()(const Eigen::VectorXd& x) const {
  if (regime == Regime::uniform)
    return nn::forward(net, to_cube_clamped(x, input_halfwidth));
  const Eigen::VectorXd z =
      to_cube_clamped(scaling::t_forward(x, params), input_halfwidth);
  return scaling::recover_control(nn::forward(net, z), x, params);
}

VerificationReport check_pointwise(const mpc::MpcSolver& solver,
                                   const mpc::Constants& c,
                                   const PolicyFn& policy, const BoundFn& bound,
                                   std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("check_pointwise: n must be positive");
  const auto& prob = solver.problem();
  const auto xs = pipeline::sample_states(solver, c, n, seed);

  VerificationReport rep;
  rep.n_samples = n;
  rep.max_input_violation = -std::numeric_limits<double>::infinity();
  rep.max_error_vs_bound = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& x = xs[i];
    const Eigen::VectorXd u = policy(x);
    const mpc::PolicyEval ref = solver.solve(x);
    if (!ref.feasible)
      throw NumericError("check_pointwise: infeasible state inside sublevel set");

    const double in_margin = containment_margin(prob.U, u);
    rep.max_input_violation = std::max(rep.max_input_violation, in_margin);
    if (in_margin > kSlack) {
      ++rep.input_violations;
      rep.violations.push_back({i, ViolationKind::input_set, in_margin});
    }

    const double err_margin = (u - ref.u).norm() - bound(x);
    rep.max_error_vs_bound = std::max(rep.max_error_vs_bound, err_margin);
    if (err_margin > kSlack) {
      ++rep.error_violations;
      rep.violations.push_back({i, ViolationKind::error_bound, err_margin});
    }

    const mpc::PolicyEval nxt = solver.solve(prob.A * x + prob.B * u);
    const double v_next =
        nxt.feasible ? nxt.v : std::numeric_limits<double>::infinity();
    rep.max_successor_value = std::max(rep.max_successor_value, v_next);
    if (!(v_next <= c.gamma * (1.0 + kSlack))) {
      ++rep.invariance_failures;
      rep.violations.push_back({i, ViolationKind::sublevel, v_next - c.gamma});
    }
  }
  return rep;
}

VerificationReport check_pointwise(const mpc::MpcSolver& solver,
                                   const mpc::Constants& c, const Policy& policy,
                                   double delta1, std::int64_t n,
                                   std::uint64_t seed) {
  const BoundFn bound =
      policy.regime == Regime::uniform
          ? BoundFn([delta1](const Eigen::VectorXd&) { return delta1; })
          : BoundFn([&policy](const Eigen::VectorXd& x) {
              return scaling::delta2(x, policy.params);
            });
  return check_pointwise(
      solver, c, [&policy](const Eigen::VectorXd& x) { return policy(x); },
      bound, n, seed);
}

namespace {

template <typename Controller>
Trajectory run_rollout(const mpc::MpcSolver& solver, const Eigen::VectorXd& x0,
                       int T_steps, Controller&& control) {
  if (T_steps < 1) throw ValidationError("rollout: T_steps must be positive");
  const auto& prob = solver.problem();
  std::unordered_map<StateKey, double, StateKeyHash> v_cache;
  const auto value_of = [&](const Eigen::VectorXd& x) {
    const StateKey k = key_of(x);
    if (const auto it = v_cache.find(k); it != v_cache.end())
      return it->second;
    const mpc::PolicyEval pe = solver.solve(x);
    const double v =
        pe.feasible ? pe.v : std::numeric_limits<double>::quiet_NaN();
    v_cache.emplace(k, v);
    return v;
  };

  Trajectory traj;
  Eigen::VectorXd x = x0;
  for (int k = 0; k < T_steps; ++k) {
    traj.states.push_back(x);
    traj.values.push_back(value_of(x));
    if (containment_margin(prob.X, x) > kSlack)
      traj.violations.push_back(
          {k, ViolationKind::state_set, containment_margin(prob.X, x)});
    const Eigen::VectorXd u = control(x);
    if (containment_margin(prob.U, u) > kSlack)
      traj.violations.push_back(
          {k, ViolationKind::input_set, containment_margin(prob.U, u)});
    traj.inputs.push_back(u);
    x = prob.A * x + prob.B * u;
  }
  traj.states.push_back(x);
  traj.values.push_back(value_of(x));
  return traj;
}

}  // namespace

Trajectory rollout(const mpc::MpcSolver& solver, const PolicyFn& policy,
                   const Eigen::VectorXd& x0, int T_steps) {
  return run_rollout(solver, x0, T_steps,
                     [&](const Eigen::VectorXd& x) { return policy(x); });
}

Trajectory rollout_mpc(const mpc::MpcSolver& solver, const Eigen::VectorXd& x0,
                       int T_steps) {
  const int nu = solver.problem().nu();
  return run_rollout(solver, x0, T_steps, [&](const Eigen::VectorXd& x) {
    const mpc::PolicyEval pe = solver.solve(x);
    return pe.feasible ? pe.u : Eigen::VectorXd::Zero(nu).eval();
  });
}

std::vector<double> lyapunov_sequence(double gamma, const mpc::Constants& c,
                                      double delta1, int K) {
  if (!(gamma > 0.0) || K < 0 || delta1 < 0.0)
    throw ValidationError("lyapunov_sequence: bad arguments");
  if (!(delta1 < c.c7 * std::sqrt(gamma)))
    throw CertificationError(
        "lyapunov_sequence: delta1 >= c7 sqrt(gamma); no strict decrease "
        "(admissible ceiling is delta_bar = " +
        std::to_string(c.delta_bar) + ")");
  std::vector<double> a;
  a.reserve(K + 1);
  a.push_back(gamma);
  for (int k = 0; k < K; ++k)
    a.push_back((1.0 - c.c3 / c.c2) * a.back() +
                c.c4 * std::sqrt(a.back() / c.c1) * delta1 +
                c.c5 * delta1 * delta1);
  return a;
}

ConvergenceMetrics convergence_metrics(const Trajectory& traj,
                                       const mpc::MpcProblem& prob,
                                       const mpc::Constants& c, double delta1,
                                       int tail_len) {
  const auto n_states = traj.states.size();
  if (n_states < static_cast<std::size_t>(tail_len) || tail_len < 1)
    throw ValidationError("convergence_metrics: trajectory shorter than tail");
  ConvergenceMetrics m;
  const double terminal_level = c.c6 * delta1 * delta1;
  for (std::size_t k = 0; k < n_states; ++k) {
    const double v = traj.values[k];
    if (std::isfinite(v) && v <= terminal_level) {
      m.time_to_terminal = static_cast<double>(k);
      break;
    }
  }
  for (std::size_t k = n_states - tail_len; k < n_states; ++k)
    m.tail_mean_state_norm += traj.states[k].norm();
  m.tail_mean_state_norm /= tail_len;
  m.final_v = traj.values.back();
  for (std::size_t k = 0; k < traj.inputs.size(); ++k)
    m.closed_loop_cost += traj.states[k].dot(prob.Q * traj.states[k]) +
                          traj.inputs[k].dot(prob.R * traj.inputs[k]);
  return m;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  if (traj.states.empty()) throw ValidationError("save_trajectory: empty");
  const auto nx = traj.states[0].size();
  const auto nu = traj.inputs.empty() ? 0 : traj.inputs[0].size();
  out << "step";
  for (Eigen::Index i = 0; i < nx; ++i) out << ",x_" << i;
  for (Eigen::Index i = 0; i < nu; ++i) out << ",u_" << i;
  out << ",v\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < nx; ++i)
      out << ',' << serialize::format_double(traj.states[k](i));
    for (Eigen::Index i = 0; i < nu; ++i)
      out << ','
          << (k < traj.inputs.size()
                  ? serialize::format_double(traj.inputs[k](i))
                  : std::string());
    out << ',' << serialize::format_double(traj.values[k]) << '\n';
  }
}

}  // namespace mpcnn::verify
