#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace mpcnn::nn {

/// Plain fully connected ReLU network: affine layers with ReLU between them
/// and an affine output layer. All arithmetic in 64-bit floats.
struct ReluNet {
  std::vector<int> dims;  // [n_in, n_1, ..., n_out]
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  void validate() const;
  int n_in() const { return dims.front(); }
  int n_out() const { return dims.back(); }
  /// Hidden-layer count.
  int depth() const { return static_cast<int>(dims.size()) - 2; }
};

struct TrainConfig {
  double lr = 1e-3;
  int batch = 64;
  int epochs = 200;
  std::uint64_t seed = 0;
  double lr_decay = 1.0;      // multiplicative per epoch, in (0,1]
  double val_fraction = 0.1;  // in (0,1)
  int patience = 20;          // early-stopping patience in epochs

  void validate() const;
};

struct EpochStats {
  double train_mse;
  double val_mse;
};

struct TrainResult {
  ReluNet net;
  std::vector<EpochStats> history;
  double best_val_mse;
  int best_epoch;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
};

Eigen::VectorXd forward(const ReluNet& net, const Eigen::VectorXd& x);

/// Gradient of mean squared error over the batch. ReLU subgradient at 0 is 0.
Gradients backward(const ReluNet& net, const std::vector<Eigen::VectorXd>& xs,
                   const std::vector<Eigen::VectorXd>& ys);

double mse(const ReluNet& net, const std::vector<Eigen::VectorXd>& xs,
           const std::vector<Eigen::VectorXd>& ys);

/// Adam training with He initialization, epoch-level learning-rate decay and
/// early stopping; returns the best-validation weights, not the last.
TrainResult train(const std::vector<Eigen::VectorXd>& xs,
                  const std::vector<Eigen::VectorXd>& ys,
                  const std::vector<int>& dims, const TrainConfig& cfg);

/// Max Euclidean output error over the dataset — an empirical lower bound on
/// the true sup error.
double sup_error(const ReluNet& net, const std::vector<Eigen::VectorXd>& xs,
                 const std::vector<Eigen::VectorXd>& ys);

std::int64_t param_count(const std::vector<int>& dims);

}  // namespace mpcnn::nn
