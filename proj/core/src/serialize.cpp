#include "mpcnn/serialize.hpp"

#include <cstdio>
#include <fstream>

#include <openssl/sha.h>

#include "mpcnn/errors.hpp"

namespace mpcnn::serialize {

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ValidationError("json: expected a matrix (array of arrays)");
  const auto rows = j.size();
  const auto cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols)
      throw ValidationError("json: ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("json: expected a vector");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

json to_json(const geometry::Polytope& p) {
  return {{"H", matrix_to_json(p.H)}, {"h", vector_to_json(p.h)}};
}

geometry::Polytope polytope_from_json(const json& j) {
  return {matrix_from_json(j.at("H")), vector_from_json(j.at("h"))};
}

json to_json(const mpc::MpcProblem& prob) {
  return {{"A", matrix_to_json(prob.A)},
          {"B", matrix_to_json(prob.B)},
          {"Q", matrix_to_json(prob.Q)},
          {"R", matrix_to_json(prob.R)},
          {"P", matrix_to_json(prob.P)},
          {"horizon", prob.horizon},
          {"X", to_json(prob.X)},
          {"U", to_json(prob.U)},
          {"Xf", to_json(prob.Xf)}};
}

mpc::MpcProblem problem_from_json(const json& j) {
  mpc::MpcProblem prob;
  prob.A = matrix_from_json(j.at("A"));
  prob.B = matrix_from_json(j.at("B"));
  prob.Q = matrix_from_json(j.at("Q"));
  prob.R = matrix_from_json(j.at("R"));
  prob.horizon = j.at("horizon").get<int>();
  prob.X = polytope_from_json(j.at("X"));
  prob.U = polytope_from_json(j.at("U"));
  // Terminal ingredients default to the LQR pair when omitted.
  prob.P = j.contains("P") ? matrix_from_json(j.at("P"))
                           : mpc::dare(prob.A, prob.B, prob.Q, prob.R);
  prob.Xf = j.contains("Xf") ? polytope_from_json(j.at("Xf"))
                             : mpc::terminal_set(prob);
  return prob;
}

json to_json(const mpc::Constants& c) {
  return {{"c0", c.c0},
          {"c1", c.c1},
          {"c2", c.c2},
          {"c3", c.c3},
          {"c4", c.c4},
          {"c5", c.c5},
          {"c6", c.c6},
          {"c7", c.c7},
          {"c8", c.c8},
          {"gamma", c.gamma},
          {"L_u", c.L_u},
          {"delta_bar", c.delta_bar},
          {"D_Xinv", c.D_Xinv},
          {"provenance",
           {{"analytic", {"c1", "c3", "c4", "c5", "c6", "c7", "c8", "delta_bar"}},
            {"sampled", {"c0", "c2", "gamma", "L_u", "D_Xinv"}}}}};
}

mpc::Constants constants_from_json(const json& j) {
  mpc::Constants c;
  c.c0 = j.at("c0").get<double>();
  c.c1 = j.at("c1").get<double>();
  c.c2 = j.at("c2").get<double>();
  c.c3 = j.at("c3").get<double>();
  c.c4 = j.at("c4").get<double>();
  c.c5 = j.at("c5").get<double>();
  c.c6 = j.at("c6").get<double>();
  c.c7 = j.at("c7").get<double>();
  c.c8 = j.at("c8").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.L_u = j.at("L_u").get<double>();
  c.delta_bar = j.at("delta_bar").get<double>();
  c.D_Xinv = j.at("D_Xinv").get<double>();
  return c;
}

json to_json(const nn::ReluNet& net) {
  json weights = json::array();
  for (const auto& W : net.weights) {
    json flat = json::array();
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index c = 0; c < W.cols(); ++c) flat.push_back(W(i, c));
    weights.push_back(std::move(flat));
  }
  json biases = json::array();
  for (const auto& b : net.biases) biases.push_back(vector_to_json(b));
  return {{"dims", net.dims}, {"weights", weights}, {"biases", biases}};
}

nn::ReluNet net_from_json(const json& j) {
  nn::ReluNet net;
  net.dims = j.at("dims").get<std::vector<int>>();
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (net.dims.size() < 2 || weights.size() != net.dims.size() - 1 ||
      biases.size() != net.dims.size() - 1)
    throw ValidationError("net json: layer count mismatch");
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    const auto rows = static_cast<std::size_t>(net.dims[l + 1]);
    const auto cols = static_cast<std::size_t>(net.dims[l]);
    if (weights[l].size() != rows * cols)
      throw ValidationError("net json: weight size mismatch");
    Eigen::MatrixXd W(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t c = 0; c < cols; ++c)
        W(i, c) = weights[l][i * cols + c].get<double>();
    net.weights.push_back(std::move(W));
    net.biases.push_back(vector_from_json(biases[l]));
  }
  net.validate();
  return net;
}

json to_json(const scaling::ScalingParams& p) {
  return {{"c8", p.c8},
          {"delta_lo", p.delta_lo},
          {"delta_hi", p.delta_hi},
          {"eps", p.eps}};
}

scaling::ScalingParams scaling_from_json(const json& j) {
  scaling::ScalingParams p;
  p.c8 = j.at("c8").get<double>();
  p.delta_lo = j.at("delta_lo").get<double>();
  p.delta_hi = j.at("delta_hi").get<double>();
  p.eps = j.at("eps").get<double>();
  p.validate();
  return p;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
         digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 0xF]);
  }
  return out;
}

std::string problem_hash(const mpc::MpcProblem& prob) {
  // nlohmann objects are key-sorted, so dump() is canonical.
  return sha256_hex(to_json(prob).dump());
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void save_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace mpcnn::serialize
