#include "mpcnn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mpcnn/errors.hpp"
#include "mpcnn/rng.hpp"

namespace mpcnn::nn {

void ReluNet::validate() const {
  if (dims.size() < 2) throw ValidationError("net: need at least one layer");
  for (int d : dims)
    if (d < 1) throw ValidationError("net: layer widths must be positive");
  const auto layers = dims.size() - 1;
  if (weights.size() != layers || biases.size() != layers)
    throw ValidationError("net: layer count mismatch");
  for (std::size_t l = 0; l < layers; ++l) {
    if (weights[l].rows() != dims[l + 1] || weights[l].cols() != dims[l])
      throw ValidationError("net: weight shape mismatch at layer " +
                            std::to_string(l));
    if (biases[l].size() != dims[l + 1])
      throw ValidationError("net: bias shape mismatch at layer " +
                            std::to_string(l));
    if (!weights[l].allFinite() || !biases[l].allFinite())
      throw ValidationError("net: non-finite parameters at layer " +
                            std::to_string(l));
  }
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ValidationError("train: lr must be positive");
  if (batch < 1) throw ValidationError("train: batch must be positive");
  if (epochs < 1) throw ValidationError("train: epochs must be positive");
  if (!(lr_decay > 0.0) || lr_decay > 1.0)
    throw ValidationError("train: lr_decay must lie in (0,1]");
  if (!(val_fraction > 0.0) || !(val_fraction < 1.0))
    throw ValidationError("train: val_fraction must lie in (0,1)");
  if (patience < 1) throw ValidationError("train: patience must be positive");
}

Eigen::VectorXd forward(const ReluNet& net, const Eigen::VectorXd& x) {
  if (x.size() != net.n_in())
    throw ValidationError("forward: input dimension mismatch");
  Eigen::VectorXd a = x;
  const auto layers = net.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    a = net.weights[l] * a + net.biases[l];
    if (!a.allFinite())
      throw NumericError("forward: non-finite activation at layer " +
                         std::to_string(l));
    if (l + 1 < layers) a = a.cwiseMax(0.0);
  }
  return a;
}

Gradients backward(const ReluNet& net, const std::vector<Eigen::VectorXd>& xs,
                   const std::vector<Eigen::VectorXd>& ys) {
  if (xs.empty() || xs.size() != ys.size())
    throw ValidationError("backward: empty or mismatched batch");
  const auto layers = net.weights.size();
  Gradients g;
  g.dW.reserve(layers);
  g.db.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    g.dW.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                            net.weights[l].cols()));
    g.db.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  std::vector<Eigen::VectorXd> act(layers + 1);  // post-activation per layer
  std::vector<Eigen::VectorXd> pre(layers);      // pre-activation
  const double scale = 1.0 / static_cast<double>(xs.size());
  for (std::size_t s = 0; s < xs.size(); ++s) {
    if (xs[s].size() != net.n_in() || ys[s].size() != net.n_out())
      throw ValidationError("backward: sample dimension mismatch");
    act[0] = xs[s];
    for (std::size_t l = 0; l < layers; ++l) {
      pre[l] = net.weights[l] * act[l] + net.biases[l];
      act[l + 1] = (l + 1 < layers) ? pre[l].cwiseMax(0.0).eval() : pre[l];
    }
    // MSE is averaged over samples and summed over output coordinates.
    Eigen::VectorXd delta = 2.0 * scale * (act[layers] - ys[s]);
    for (std::size_t l = layers; l-- > 0;) {
      g.dW[l] += delta * act[l].transpose();
      g.db[l] += delta;
      if (l > 0) {
        delta = net.weights[l].transpose() * delta;
        delta = (pre[l - 1].array() > 0.0).select(delta, 0.0);
      }
    }
  }
  return g;
}

double mse(const ReluNet& net, const std::vector<Eigen::VectorXd>& xs,
           const std::vector<Eigen::VectorXd>& ys) {
  if (xs.empty() || xs.size() != ys.size())
    throw ValidationError("mse: empty or mismatched dataset");
  double acc = 0.0;
  for (std::size_t s = 0; s < xs.size(); ++s)
    acc += (forward(net, xs[s]) - ys[s]).squaredNorm();
  return acc / static_cast<double>(xs.size());
}

namespace {

ReluNet he_init(const std::vector<int>& dims, std::uint64_t seed) {
  ReluNet net;
  net.dims = dims;
  Rng rng(seed, 0x4E4E5F494E4954ULL);  // dedicated weight stream
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double sd = std::sqrt(2.0 / double(dims[l]));
    Eigen::MatrixXd W(dims[l + 1], dims[l]);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = sd * rng.normal();
    net.weights.push_back(std::move(W));
    net.biases.push_back(Eigen::VectorXd::Zero(dims[l + 1]));
  }
  return net;
}

}  // namespace

TrainResult train(const std::vector<Eigen::VectorXd>& xs,
                  const std::vector<Eigen::VectorXd>& ys,
                  const std::vector<int>& dims, const TrainConfig& cfg) {
  cfg.validate();
  if (xs.empty() || xs.size() != ys.size())
    throw ValidationError("train: empty or mismatched dataset");
  if (dims.size() < 2 || xs[0].size() != dims.front() ||
      ys[0].size() != dims.back())
    throw ValidationError("train: dims do not match dataset");

  const auto n = xs.size();
  auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * double(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng split_rng(cfg.seed, 0x53504C4954ULL);
  for (std::size_t i = n; i-- > 1;)
    std::swap(idx[i], idx[split_rng.uniform_int(i + 1)]);
  std::vector<Eigen::VectorXd> tx, ty, vx, vy;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dx = (i < n - n_val) ? tx : vx;
    auto& dy = (i < n - n_val) ? ty : vy;
    dx.push_back(xs[idx[i]]);
    dy.push_back(ys[idx[i]]);
  }

  ReluNet net = he_init(dims, cfg.seed);
  const auto layers = net.weights.size();
  std::vector<Eigen::MatrixXd> mW(layers), vW(layers);
  std::vector<Eigen::VectorXd> mb(layers), vb(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    mW[l] = Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols());
    vW[l] = mW[l];
    mb[l] = Eigen::VectorXd::Zero(net.biases[l].size());
    vb[l] = mb[l];
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::int64_t step = 0;

  TrainResult res;
  res.best_val_mse = std::numeric_limits<double>::infinity();
  res.best_epoch = -1;
  ReluNet best = net;
  int stall = 0;

  std::vector<std::size_t> order(tx.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(cfg.seed, 0x5348554646ULL);
  std::vector<Eigen::VectorXd> bx, by;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr * std::pow(cfg.lr_decay, epoch);
    for (std::size_t i = order.size(); i-- > 1;)
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch)) {
      const auto stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      bx.clear();
      by.clear();
      for (std::size_t i = start; i < stop; ++i) {
        bx.push_back(tx[order[i]]);
        by.push_back(ty[order[i]]);
      }
      const Gradients g = backward(net, bx, by);
      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, double(step));
      const double bc2 = 1.0 - std::pow(kBeta2, double(step));
      for (std::size_t l = 0; l < layers; ++l) {
        mW[l] = kBeta1 * mW[l] + (1.0 - kBeta1) * g.dW[l];
        vW[l] = kBeta2 * vW[l] + (1.0 - kBeta2) * g.dW[l].cwiseAbs2();
        net.weights[l].array() -=
            lr * (mW[l] / bc1).array() /
            ((vW[l] / bc2).array().sqrt() + kEps);
        mb[l] = kBeta1 * mb[l] + (1.0 - kBeta1) * g.db[l];
        vb[l] = kBeta2 * vb[l] + (1.0 - kBeta2) * g.db[l].cwiseAbs2();
        net.biases[l].array() -=
            lr * (mb[l] / bc1).array() /
            ((vb[l] / bc2).array().sqrt() + kEps);
      }
    }
    const double train_mse = mse(net, tx, ty);
    const double val_mse = mse(net, vx, vy);
    res.history.push_back({train_mse, val_mse});
    if (!std::isfinite(train_mse) || train_mse > 1e12)
      throw NumericError("train: loss diverged at epoch " +
                         std::to_string(epoch));
    if (val_mse < res.best_val_mse) {
      res.best_val_mse = val_mse;
      res.best_epoch = epoch;
      best = net;
      stall = 0;
    } else if (++stall >= cfg.patience) {
      break;
    }
  }
  res.net = std::move(best);
  return res;
}

double sup_error(const ReluNet& net, const std::vector<Eigen::VectorXd>& xs,
                 const std::vector<Eigen::VectorXd>& ys) {
  if (xs.empty() || xs.size() != ys.size())
    throw ValidationError("sup_error: empty or mismatched dataset");
  double worst = 0.0;
  for (std::size_t s = 0; s < xs.size(); ++s)
    worst = std::max(worst, (forward(net, xs[s]) - ys[s]).norm());
  return worst;
}

std::int64_t param_count(const std::vector<int>& dims) {
  if (dims.size() < 2) throw ValidationError("param_count: need two layers");
  std::int64_t total = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] < 1 || dims[l + 1] < 1)
      throw ValidationError("param_count: widths must be positive");
    total += std::int64_t(dims[l]) * dims[l + 1] + dims[l + 1];
  }
  return total;
}

}  // namespace mpcnn::nn
