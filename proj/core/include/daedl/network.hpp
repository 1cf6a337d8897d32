#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "daedl/data.hpp"
#include "daedl/dirichlet.hpp"
#include "daedl/rng.hpp"

namespace daedl {

enum class Activation { relu, identity };

/// How logits map to Dirichlet concentrations.
///   exp:               alpha = exp(z)        (density-aware scheme)
///   relu_plus_one:     alpha = 1 + relu(z)   (conventional evidential)
///   softplus_plus_one: alpha = 1 + softplus(z)
enum class Parameterization { exp, relu_plus_one, softplus_plus_one };

enum class Optimizer { sgd, adam };

struct DenseLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
  Eigen::VectorXd u;  // persistent power-iteration left vector, unit norm
  Activation activation = Activation::relu;
  bool residual = false;  // y = x + act(Wx + b); requires square W

  Eigen::Index out_dim() const { return W.rows(); }
  Eigen::Index in_dim() const { return W.cols(); }
};

/// Dense feature extractor plus linear classifier head.
struct EvidentialNetwork {
  std::vector<DenseLayer> feature_layers;
  DenseLayer head;  // identity activation, maps features to C logits
  bool spectral_norm_enabled = true;
  Parameterization parameterization = Parameterization::exp;

  Eigen::Index input_dim() const;
  Eigen::Index feature_dim() const { return head.in_dim(); }
  Eigen::Index num_classes() const { return head.out_dim(); }
};

/// Glorot-uniform initialized network with ReLU hidden layers. With
/// `residual_hidden`, square hidden layers become skip blocks x + relu(Wx+b);
/// spectral normalization then bounds each block's Lipschitz constant by
/// 1 + sigma(W) while keeping the map distance-preserving from below.
EvidentialNetwork make_network(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden_dims,
                               Eigen::Index num_classes, Parameterization parameterization,
                               bool spectral_norm_enabled, Rng& rng, bool residual_hidden = true);

struct ForwardResult {
  Eigen::VectorXd features;  // z = f(x), length H
  Eigen::VectorXd logits;    // g(z), length C
};

ForwardResult forward(const EvidentialNetwork& net, const Eigen::VectorXd& x);

struct SpectralNormResult {
  double sigma_hat = 0.0;
  bool skipped = false;  // zero matrix: normalization skipped
};

/// Runs `iterations` power-iteration rounds with the layer's persistent u,
/// then divides W by the spectral-norm estimate.
SpectralNormResult spectral_normalize(DenseLayer& layer, int iterations);

/// Converged power-iteration estimate of ||W||_2 without mutating W.
double spectral_norm_estimate(const Eigen::MatrixXd& W, int iterations);

struct TrainConfig {
  double learning_rate = 1e-3;
  double lambda = 5e-2;
  // batch/epoch/decay defaults are sized for small datasets: at n ~ 1000 they
  // give roughly the same optimizer step count that batch 64 / 50 epochs /
  // 0.95^epoch decay gives at 48k samples.
  int batch_size = 16;
  int max_epochs = 1000;
  int patience = 30;
  double lr_decay = 0.997;  // learning rate at epoch t is learning_rate * lr_decay^t
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;  // beta1=0.9, beta2=0.999, eps=1e-8
};

struct EpochStats {
  int epoch;
  double train_loss;
  double val_loss;
  double learning_rate;
  double max_feature_sigma;  // converged estimate across feature layers (0 if none)
};

struct TrainResult {
  EvidentialNetwork net;  // parameters with the best validation loss
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Mini-batch training with early stopping on validation loss.
TrainResult train(EvidentialNetwork net, const LabeledDataset& train_set,
                  const LabeledDataset& val_set, const TrainConfig& cfg);

struct LayerGradients {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
};

struct NetworkGradients {
  std::vector<LayerGradients> feature;
  LayerGradients head;
};

/// Mean evidential loss over the rows of X; fills gradients when requested.
double batch_loss_and_gradients(const EvidentialNetwork& net, const Eigen::MatrixXd& X,
                                const Eigen::VectorXi& labels, const LossConfig& loss_cfg,
                                NetworkGradients* grads);

}  // namespace daedl
