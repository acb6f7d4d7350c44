#pragma once

#include <string>

#include <json.hpp>

#include "mpcnn/geometry.hpp"
#include "mpcnn/mpc.hpp"
#include "mpcnn/nn.hpp"
#include "mpcnn/scaling.hpp"

namespace mpcnn::serialize {

using json = nlohmann::json;

json to_json(const geometry::Polytope& p);
geometry::Polytope polytope_from_json(const json& j);

json to_json(const mpc::MpcProblem& prob);
mpc::MpcProblem problem_from_json(const json& j);

json to_json(const mpc::Constants& c);
mpc::Constants constants_from_json(const json& j);

json to_json(const nn::ReluNet& net);
nn::ReluNet net_from_json(const json& j);

json to_json(const scaling::ScalingParams& p);
scaling::ScalingParams scaling_from_json(const json& j);

/// SHA-256 hex digest of the canonical (sorted-key, full-precision) problem
/// JSON; ties datasets and models to the exact problem instance.
std::string problem_hash(const mpc::MpcProblem& prob);

std::string sha256_hex(const std::string& bytes);

json load_json(const std::string& path);
void save_json(const std::string& path, const json& j);

/// Full-precision decimal for 64-bit floats (round-trip exact).
std::string format_double(double v);

}  // namespace mpcnn::serialize
