#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mpcnn/mpc.hpp"
#include "mpcnn/scaling.hpp"

namespace mpcnn::pipeline {

struct DatasetMeta {
  std::string regime;  // "uniform" or "scaled"
  double eps = 0;
  double delta1 = 0;          // uniform regime
  double delta_lo = 0;        // scaled regime
  double delta_hi = 0;
  double c8 = 0;
  double input_halfwidth = 0;  // D(Xinv) or D2; states mapped to [0,1]^nx
  std::uint64_t seed = 0;
  std::string problem_hash;
};

struct Dataset {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> targets;
  std::vector<Eigen::VectorXd> states;  // raw states, kept for verification
  DatasetMeta meta;
};

struct SampleStats {
  std::int64_t draws = 0;
  std::int64_t accepted = 0;
};

/// n states with v_mpc(x) <= gamma, by rejection sampling uniform draws from
/// the bounding box of X. Errors out if the acceptance rate falls below 1e-4.
std::vector<Eigen::VectorXd> sample_states(const mpc::MpcSolver& solver,
                                           const mpc::Constants& c,
                                           std::int64_t n, std::uint64_t seed,
                                           SampleStats* stats = nullptr);

/// Same rejection scheme over X itself (no sublevel filter).
std::vector<Eigen::VectorXd> sample_states_in_x(const mpc::MpcSolver& solver,
                                                std::int64_t n,
                                                std::uint64_t seed,
                                                SampleStats* stats = nullptr);

/// Uniform-accuracy targets: inputs are states mapped onto [0,1]^nx over the
/// cube of half width D(Xinv); targets are u_mpc projected onto the
/// eps-tightened input set, eps = delta1 d(U) / (2 D(U)).
Dataset build_uniform_dataset(const mpc::MpcSolver& solver,
                              const mpc::Constants& c, double delta1,
                              std::int64_t n, std::uint64_t seed);

/// State-aware targets: inputs are T(x) mapped onto [0,1]^nx over the cube of
/// half width D2; targets are the projected u_mpc rescaled by 1/beta(x).
Dataset build_scaled_dataset(const mpc::MpcSolver& solver,
                             const mpc::Constants& c,
                             const scaling::ScalingParams& params,
                             std::int64_t n, std::uint64_t seed);

/// CSV (header x_0..,y_0..) plus a JSON meta sidecar at path + ".meta.json".
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace mpcnn::pipeline
