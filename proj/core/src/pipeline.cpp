#include "mpcnn/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mpcnn/bounds.hpp"
#include "mpcnn/errors.hpp"
#include "mpcnn/geometry.hpp"
#include "mpcnn/rng.hpp"
#include "mpcnn/serialize.hpp"

namespace mpcnn::pipeline {

namespace {

struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

Box bounding_box(const geometry::Polytope& X) {
  const int n = X.dim();
  Box b{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(i) = 1.0;
    b.hi(i) = geometry::support(X, e);
    b.lo(i) = -geometry::support(X, -e);
  }
  return b;
}

template <typename Accept>
std::vector<Eigen::VectorXd> rejection_sample(const mpc::MpcSolver& solver,
                                              std::int64_t n,
                                              std::uint64_t seed,
                                              SampleStats* stats,
                                              Accept&& accept) {
  if (n < 1) throw ValidationError("sample_states: n must be positive");
  const Box box = bounding_box(solver.problem().X);
  const int nx = solver.problem().nx();
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  SampleStats st;
  for (std::int64_t i = 0; i < n; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));  // per-index stream
    for (;;) {
      Eigen::VectorXd x(nx);
      for (int k = 0; k < nx; ++k) x(k) = rng.uniform(box.lo(k), box.hi(k));
      ++st.draws;
      if (accept(x)) {
        ++st.accepted;
        out.push_back(std::move(x));
        break;
      }
      if (st.draws >= 1000000 &&
          double(st.accepted) < 1e-4 * double(st.draws))
        throw NumericError(
            "sample_states: acceptance rate below 1e-4; the sublevel "
            "threshold is likely misestimated");
    }
  }
  if (stats) *stats = st;
  return out;
}

}  // namespace

std::vector<Eigen::VectorXd> sample_states(const mpc::MpcSolver& solver,
                                           const mpc::Constants& c,
                                           std::int64_t n, std::uint64_t seed,
                                           SampleStats* stats) {
  return rejection_sample(solver, n, seed, stats, [&](const Eigen::VectorXd& x) {
    return mpc::in_sublevel(solver, c, x);
  });
}

std::vector<Eigen::VectorXd> sample_states_in_x(const mpc::MpcSolver& solver,
                                                std::int64_t n,
                                                std::uint64_t seed,
                                                SampleStats* stats) {
  const auto& X = solver.problem().X;
  return rejection_sample(solver, n, seed, stats, [&](const Eigen::VectorXd& x) {
    return geometry::contains(X, x, 0.0);
  });
}

Dataset build_uniform_dataset(const mpc::MpcSolver& solver,
                              const mpc::Constants& c, double delta1,
                              std::int64_t n, std::uint64_t seed) {
  if (!(delta1 > 0.0))
    throw ValidationError("uniform dataset: delta1 must be positive");
  const auto& U = solver.problem().U;
  const double dU = geometry::inradius(U);
  const double DU = geometry::radius(U);
  const double eps = delta1 * dU / (2.0 * DU);
  if (eps >= dU)
    throw ValidationError("uniform dataset: tightening exceeds the inradius");
  const geometry::Polytope Ushrunk =
      eps > 0.0 ? geometry::tighten(U, eps) : U;

  Dataset ds;
  ds.states = sample_states(solver, c, n, seed);
  ds.inputs.reserve(ds.states.size());
  ds.targets.reserve(ds.states.size());
  for (const auto& x : ds.states) {
    const mpc::PolicyEval pe = solver.solve(x);
    if (!pe.feasible)
      throw NumericError("uniform dataset: infeasible state inside sublevel set");
    ds.inputs.push_back(bounds::to_unit_cube(x, c.D_Xinv));
    ds.targets.push_back(geometry::project(Ushrunk, pe.u));
  }
  ds.meta.regime = "uniform";
  ds.meta.eps = eps;
  ds.meta.delta1 = delta1;
  ds.meta.input_halfwidth = c.D_Xinv;
  ds.meta.seed = seed;
  ds.meta.problem_hash = serialize::problem_hash(solver.problem());
  return ds;
}

Dataset build_scaled_dataset(const mpc::MpcSolver& solver,
                             const mpc::Constants& c,
                             const scaling::ScalingParams& params,
                             std::int64_t n, std::uint64_t seed) {
  params.validate_against(solver.problem().U);
  const double D2 =
      c.D_Xinv + (2.0 * params.delta_hi / params.c8) *
                     std::log(params.delta_hi / params.delta_lo);

  Dataset ds;
  ds.states = sample_states(solver, c, n, seed);
  ds.inputs.reserve(ds.states.size());
  ds.targets.reserve(ds.states.size());
  for (const auto& x : ds.states) {
    const mpc::PolicyEval pe = solver.solve(x);
    if (!pe.feasible)
      throw NumericError("scaled dataset: infeasible state inside sublevel set");
    ds.inputs.push_back(bounds::to_unit_cube(scaling::t_forward(x, params), D2));
    ds.targets.push_back(
        scaling::scaled_target(x, pe.u, params, solver.problem().U));
  }
  ds.meta.regime = "scaled";
  ds.meta.eps = params.eps;
  ds.meta.delta_lo = params.delta_lo;
  ds.meta.delta_hi = params.delta_hi;
  ds.meta.c8 = params.c8;
  ds.meta.input_halfwidth = D2;
  ds.meta.seed = seed;
  ds.meta.problem_hash = serialize::problem_hash(solver.problem());
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  if (ds.inputs.empty() || ds.inputs.size() != ds.targets.size())
    throw ValidationError("save_dataset: empty or inconsistent dataset");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  const auto nin = ds.inputs[0].size();
  const auto nout = ds.targets[0].size();
  for (Eigen::Index i = 0; i < nin; ++i)
    out << (i ? "," : "") << "x_" << i;
  for (Eigen::Index i = 0; i < nout; ++i) out << ",y_" << i;
  out << '\n';
  for (std::size_t s = 0; s < ds.inputs.size(); ++s) {
    for (Eigen::Index i = 0; i < nin; ++i)
      out << (i ? "," : "") << serialize::format_double(ds.inputs[s](i));
    for (Eigen::Index i = 0; i < nout; ++i)
      out << ',' << serialize::format_double(ds.targets[s](i));
    out << '\n';
  }
  serialize::json meta = {{"regime", ds.meta.regime},
                          {"eps", ds.meta.eps},
                          {"delta1", ds.meta.delta1},
                          {"delta_lo", ds.meta.delta_lo},
                          {"delta_hi", ds.meta.delta_hi},
                          {"c8", ds.meta.c8},
                          {"input_halfwidth", ds.meta.input_halfwidth},
                          {"seed", ds.meta.seed},
                          {"problem_hash", ds.meta.problem_hash},
                          {"n", ds.inputs.size()}};
  serialize::save_json(path + ".meta.json", meta);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  const serialize::json meta = serialize::load_json(path + ".meta.json");
  Dataset ds;
  ds.meta.regime = meta.at("regime").get<std::string>();
  ds.meta.eps = meta.at("eps").get<double>();
  ds.meta.delta1 = meta.at("delta1").get<double>();
  ds.meta.delta_lo = meta.at("delta_lo").get<double>();
  ds.meta.delta_hi = meta.at("delta_hi").get<double>();
  ds.meta.c8 = meta.at("c8").get<double>();
  ds.meta.input_halfwidth = meta.at("input_halfwidth").get<double>();
  ds.meta.seed = meta.at("seed").get<std::uint64_t>();
  ds.meta.problem_hash = meta.at("problem_hash").get<std::string>();

  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("load_dataset: empty csv " + path);
  std::size_t nin = 0, nout = 0;
  {
    std::stringstream header(line);
    std::string col;
    while (std::getline(header, col, ',')) {
      if (col.rfind("x_", 0) == 0) ++nin;
      else if (col.rfind("y_", 0) == 0) ++nout;
      else throw ValidationError("load_dataset: unexpected column " + col);
    }
  }
  if (nin == 0 || nout == 0)
    throw ValidationError("load_dataset: malformed header in " + path);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    Eigen::VectorXd x(nin), y(nout);
    for (std::size_t i = 0; i < nin + nout; ++i) {
      if (!std::getline(row, cell, ','))
        throw ValidationError("load_dataset: short row in " + path);
      const double v = std::stod(cell);
      if (i < nin) x(i) = v; else y(i - nin) = v;
    }
    ds.inputs.push_back(std::move(x));
    ds.targets.push_back(std::move(y));
  }

  // Raw states are recovered from the normalized inputs via the meta block.
  scaling::ScalingParams params;
  if (ds.meta.regime == "scaled") {
    params.c8 = ds.meta.c8;
    params.delta_lo = ds.meta.delta_lo;
    params.delta_hi = ds.meta.delta_hi;
    params.eps = ds.meta.eps;
    params.validate();
  }
  ds.states.reserve(ds.inputs.size());
  for (const auto& z : ds.inputs) {
    Eigen::VectorXd w = bounds::from_unit_cube(z, ds.meta.input_halfwidth);
    ds.states.push_back(ds.meta.regime == "scaled"
                            ? scaling::t_inverse(w, params)
                            : std::move(w));
  }
  return ds;
}

}  // namespace mpcnn::pipeline
