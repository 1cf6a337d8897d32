#include "daedl/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "daedl/predict.hpp"

namespace daedl {

Eigen::Index EvidentialNetwork::input_dim() const {
  return feature_layers.empty() ? head.in_dim() : feature_layers.front().in_dim();
}

namespace {

DenseLayer init_layer(Eigen::Index out, Eigen::Index in, Activation act, Rng& rng) {
  if (out < 1 || in < 1) throw std::invalid_argument("make_network: layer dims must be positive");
  DenseLayer layer;
  layer.W.resize(out, in);
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  for (Eigen::Index r = 0; r < out; ++r) {
    for (Eigen::Index c = 0; c < in; ++c) layer.W(r, c) = rng.uniform(-a, a);
  }
  layer.b = Eigen::VectorXd::Zero(out);
  layer.u.resize(out);
  for (Eigen::Index r = 0; r < out; ++r) layer.u[r] = rng.normal();
  const double un = layer.u.norm();
  if (un > 0.0) {
    layer.u /= un;
  } else {
    layer.u.setZero();
    layer.u[0] = 1.0;
  }
  layer.activation = act;
  return layer;
}

}  // namespace

EvidentialNetwork make_network(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden_dims,
                               Eigen::Index num_classes, Parameterization parameterization,
                               bool spectral_norm_enabled, Rng& rng, bool residual_hidden) {
  if (num_classes < 2) throw std::invalid_argument("make_network: need at least 2 classes");
  EvidentialNetwork net;
  net.parameterization = parameterization;
  net.spectral_norm_enabled = spectral_norm_enabled;
  Eigen::Index in = input_dim;
  for (Eigen::Index h : hidden_dims) {
    DenseLayer layer = init_layer(h, in, Activation::relu, rng);
    layer.residual = residual_hidden && h == in;
    net.feature_layers.push_back(std::move(layer));
    in = h;
  }
  net.head = init_layer(num_classes, in, Activation::identity, rng);
  return net;
}

ForwardResult forward(const EvidentialNetwork& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim()) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  if (!x.allFinite()) throw std::invalid_argument("forward: non-finite input");
  Eigen::VectorXd a = x;
  for (const DenseLayer& layer : net.feature_layers) {
    if (layer.residual && layer.in_dim() != layer.out_dim()) {
      throw std::invalid_argument("forward: residual layer must be square");
    }
    Eigen::VectorXd z = layer.W * a + layer.b;
    if (layer.activation == Activation::relu) z = z.cwiseMax(0.0);
    if (layer.residual) {
      a += z;
    } else {
      a = std::move(z);
    }
  }
  ForwardResult out;
  out.logits = net.head.W * a + net.head.b;
  out.features = std::move(a);
  return out;
}

SpectralNormResult spectral_normalize(DenseLayer& layer, int iterations) {
  if (iterations < 1) throw std::invalid_argument("spectral_normalize: need >= 1 iteration");
  if (layer.W.norm() == 0.0) return SpectralNormResult{0.0, true};
  if (layer.u.size() != layer.W.rows()) {
    layer.u = Eigen::VectorXd::Ones(layer.W.rows()).normalized();
  }

  Eigen::VectorXd u = layer.u;
  Eigen::VectorXd v;
  for (int it = 0; it < iterations; ++it) {
    v = layer.W.transpose() * u;
    double vn = v.norm();
    if (vn == 0.0) {
      v = Eigen::VectorXd::Ones(layer.W.cols());
      vn = v.norm();
    }
    v /= vn;
    u = layer.W * v;
    double un = u.norm();
    if (un == 0.0) {
      u = Eigen::VectorXd::Ones(layer.W.rows());
      un = u.norm();
    }
    u /= un;
  }
  const double sigma = u.dot(layer.W * v);
  layer.u = u;
  if (sigma <= 0.0) return SpectralNormResult{sigma, true};
  layer.W /= sigma;
  return SpectralNormResult{sigma, false};
}

double spectral_norm_estimate(const Eigen::MatrixXd& W, int iterations) {
  if (iterations < 1) throw std::invalid_argument("spectral_norm_estimate: need >= 1 iteration");
  if (W.norm() == 0.0) return 0.0;
  Rng rng(0x5eed5eedULL);
  Eigen::VectorXd u(W.rows());
  for (Eigen::Index r = 0; r < u.size(); ++r) u[r] = rng.normal();
  u.normalize();
  Eigen::VectorXd v;
  for (int it = 0; it < iterations; ++it) {
    v = W.transpose() * u;
    double vn = v.norm();
    if (vn == 0.0) {
      v = Eigen::VectorXd::Ones(W.cols());
      vn = v.norm();
    }
    v /= vn;
    u = W * v;
    double un = u.norm();
    if (un == 0.0) {
      u = Eigen::VectorXd::Ones(W.rows());
      un = u.norm();
    }
    u /= un;
  }
  return u.dot(W * v);
}

namespace {

Eigen::VectorXd logits_gradient(const EvidentialNetwork& net, const Eigen::VectorXd& logits,
                                const OneHotLabel& y, const LossConfig& cfg) {
  switch (net.parameterization) {
    case Parameterization::exp:
      return loss_grad_wrt_logits(logits, y, cfg, 1.0);
    case Parameterization::relu_plus_one: {
      const ConcentrationVector alpha = alpha_for(net.parameterization, logits, 1.0);
      Eigen::VectorXd g = loss_grad_wrt_alpha(alpha, y, cfg);
      for (Eigen::Index c = 0; c < g.size(); ++c) {
        if (logits[c] <= 0.0) g[c] = 0.0;  // d alpha/dz through relu
      }
      return g;
    }
    case Parameterization::softplus_plus_one: {
      const ConcentrationVector alpha = alpha_for(net.parameterization, logits, 1.0);
      Eigen::VectorXd g = loss_grad_wrt_alpha(alpha, y, cfg);
      for (Eigen::Index c = 0; c < g.size(); ++c) {
        g[c] *= 1.0 / (1.0 + std::exp(-logits[c]));  // d softplus = sigmoid
      }
      return g;
    }
  }
  throw std::invalid_argument("logits_gradient: unknown parameterization");
}

void zero_like(const EvidentialNetwork& net, NetworkGradients& grads) {
  grads.feature.resize(net.feature_layers.size());
  for (std::size_t l = 0; l < net.feature_layers.size(); ++l) {
    grads.feature[l].dW = Eigen::MatrixXd::Zero(net.feature_layers[l].W.rows(),
                                                net.feature_layers[l].W.cols());
    grads.feature[l].db = Eigen::VectorXd::Zero(net.feature_layers[l].b.size());
  }
  grads.head.dW = Eigen::MatrixXd::Zero(net.head.W.rows(), net.head.W.cols());
  grads.head.db = Eigen::VectorXd::Zero(net.head.b.size());
}

}  // namespace

double batch_loss_and_gradients(const EvidentialNetwork& net, const Eigen::MatrixXd& X,
                                const Eigen::VectorXi& labels, const LossConfig& loss_cfg,
                                NetworkGradients* grads) {
  const Eigen::Index n = X.rows();
  if (n == 0) throw std::invalid_argument("batch_loss_and_gradients: empty batch");
  if (X.cols() != net.input_dim()) {
    throw std::invalid_argument("batch_loss_and_gradients: input dimension mismatch");
  }
  if (labels.size() != n) {
    throw std::invalid_argument("batch_loss_and_gradients: label count mismatch");
  }
  if (grads) zero_like(net, *grads);

  const std::size_t num_layers = net.feature_layers.size();
  std::vector<Eigen::VectorXd> pre(num_layers), act(num_layers + 1);
  double total = 0.0;

  for (Eigen::Index i = 0; i < n; ++i) {
    act[0] = X.row(i).transpose();
    for (std::size_t l = 0; l < num_layers; ++l) {
      const DenseLayer& layer = net.feature_layers[l];
      if (layer.residual && layer.in_dim() != layer.out_dim()) {
        throw std::invalid_argument("batch_loss_and_gradients: residual layer must be square");
      }
      pre[l] = layer.W * act[l] + layer.b;
      Eigen::VectorXd out =
          layer.activation == Activation::relu ? pre[l].cwiseMax(0.0).eval() : pre[l];
      act[l + 1] = layer.residual ? (act[l] + out).eval() : std::move(out);
    }
    const Eigen::VectorXd logits = net.head.W * act[num_layers] + net.head.b;
    if (!logits.allFinite()) {
      throw std::runtime_error("batch_loss_and_gradients: non-finite logits, parameters diverged");
    }
    const OneHotLabel y = OneHotLabel::from_index(labels[i], net.num_classes());
    total += edl_loss(alpha_for(net.parameterization, logits, 1.0), y, loss_cfg);

    if (grads) {
      const Eigen::VectorXd dlogits = logits_gradient(net, logits, y, loss_cfg);
      grads->head.dW.noalias() += dlogits * act[num_layers].transpose();
      grads->head.db += dlogits;
      Eigen::VectorXd da = net.head.W.transpose() * dlogits;
      for (std::size_t l = num_layers; l-- > 0;) {
        Eigen::VectorXd dz = da;
        if (net.feature_layers[l].activation == Activation::relu) {
          for (Eigen::Index r = 0; r < dz.size(); ++r) {
            if (pre[l][r] <= 0.0) dz[r] = 0.0;
          }
        }
        grads->feature[l].dW.noalias() += dz * act[l].transpose();
        grads->feature[l].db += dz;
        if (l > 0) {
          Eigen::VectorXd below = net.feature_layers[l].W.transpose() * dz;
          da = net.feature_layers[l].residual ? (below + da).eval() : std::move(below);
        }
      }
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  if (grads) {
    for (auto& g : grads->feature) {
      g.dW *= inv_n;
      g.db *= inv_n;
    }
    grads->head.dW *= inv_n;
    grads->head.db *= inv_n;
  }
  return total * inv_n;
}

namespace {

struct AdamSlot {
  Eigen::MatrixXd mW, vW;
  Eigen::VectorXd mb, vb;
};

struct AdamState {
  std::vector<AdamSlot> feature;
  AdamSlot head;
  long step = 0;

  static AdamSlot make_slot(const DenseLayer& layer) {
    AdamSlot s;
    s.mW = Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols());
    s.vW = s.mW;
    s.mb = Eigen::VectorXd::Zero(layer.b.size());
    s.vb = s.mb;
    return s;
  }

  explicit AdamState(const EvidentialNetwork& net) {
    for (const auto& layer : net.feature_layers) feature.push_back(make_slot(layer));
    head = make_slot(net.head);
  }
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_update(DenseLayer& layer, const LayerGradients& g, AdamSlot& slot, double lr,
                 double bc1, double bc2) {
  slot.mW = kBeta1 * slot.mW + (1.0 - kBeta1) * g.dW;
  slot.vW = kBeta2 * slot.vW + (1.0 - kBeta2) * g.dW.cwiseProduct(g.dW);
  slot.mb = kBeta1 * slot.mb + (1.0 - kBeta1) * g.db;
  slot.vb = kBeta2 * slot.vb + (1.0 - kBeta2) * g.db.cwiseProduct(g.db);
  layer.W.array() -= lr * (slot.mW.array() / bc1) / ((slot.vW.array() / bc2).sqrt() + kAdamEps);
  layer.b.array() -= lr * (slot.mb.array() / bc1) / ((slot.vb.array() / bc2).sqrt() + kAdamEps);
}

void optimizer_step(EvidentialNetwork& net, const NetworkGradients& grads, const TrainConfig& cfg,
                    double lr, AdamState& adam) {
  if (cfg.optimizer == Optimizer::sgd) {
    for (std::size_t l = 0; l < net.feature_layers.size(); ++l) {
      net.feature_layers[l].W -= lr * grads.feature[l].dW;
      net.feature_layers[l].b -= lr * grads.feature[l].db;
    }
    net.head.W -= lr * grads.head.dW;
    net.head.b -= lr * grads.head.db;
    return;
  }
  ++adam.step;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam.step));
  for (std::size_t l = 0; l < net.feature_layers.size(); ++l) {
    adam_update(net.feature_layers[l], grads.feature[l], adam.feature[l], lr, bc1, bc2);
  }
  adam_update(net.head, grads.head, adam.head, lr, bc1, bc2);
}

void validate_train_inputs(const EvidentialNetwork& net, const LabeledDataset& train_set,
                           const LabeledDataset& val_set, const TrainConfig& cfg) {
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw std::invalid_argument("train: datasets must be non-empty");
  }
  train_set.validate();
  val_set.validate();
  if (train_set.dim() != net.input_dim() || val_set.dim() != net.input_dim()) {
    throw std::invalid_argument("train: dataset dimension does not match the network");
  }
  if (train_set.num_classes > net.num_classes() || val_set.num_classes > net.num_classes()) {
    throw std::invalid_argument("train: label range exceeds network classes");
  }
  if (cfg.batch_size < 1 || cfg.batch_size > train_set.size()) {
    throw std::invalid_argument("train: batch_size must lie in [1, training-set size]");
  }
  if (cfg.max_epochs < 1) throw std::invalid_argument("train: max_epochs must be positive");
  if (cfg.patience < 1 || cfg.patience > cfg.max_epochs) {
    throw std::invalid_argument("train: patience must lie in [1, max_epochs]");
  }
  if (!(cfg.learning_rate >= 0.0)) {
    throw std::invalid_argument("train: learning_rate must be non-negative");
  }
  if (!(cfg.lr_decay > 0.0 && cfg.lr_decay <= 1.0)) {
    throw std::invalid_argument("train: lr_decay must lie in (0, 1]");
  }
  if (cfg.lambda < 0.0) throw std::invalid_argument("train: lambda must be non-negative");
}

double max_feature_sigma(const EvidentialNetwork& net) {
  double max_sigma = 0.0;
  for (const auto& layer : net.feature_layers) {
    max_sigma = std::max(max_sigma, spectral_norm_estimate(layer.W, 50));
  }
  return max_sigma;
}

}  // namespace

TrainResult train(EvidentialNetwork net, const LabeledDataset& train_set,
                  const LabeledDataset& val_set, const TrainConfig& cfg) {
  validate_train_inputs(net, train_set, val_set, cfg);

  const LossConfig loss_cfg{cfg.lambda};
  Rng rng(cfg.seed);
  AdamState adam(net);
  NetworkGradients grads;

  const Eigen::Index n = train_set.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  EvidentialNetwork best_net = net;
  int since_improve = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, epoch);
    rng.shuffle(order);

    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd xb(len, train_set.dim());
      Eigen::VectorXi yb(len);
      for (Eigen::Index j = 0; j < len; ++j) {
        xb.row(j) = train_set.X.row(order[start + j]);
        yb[j] = train_set.y[order[start + j]];
      }
      const double loss = batch_loss_and_gradients(net, xb, yb, loss_cfg, &grads);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch offset " + std::to_string(start));
      }
      optimizer_step(net, grads, cfg, lr, adam);
      if (net.spectral_norm_enabled) {
        for (auto& layer : net.feature_layers) spectral_normalize(layer, 1);
      }
    }

    const double train_loss = batch_loss_and_gradients(net, train_set.X, train_set.y, loss_cfg, nullptr);
    const double val_loss = batch_loss_and_gradients(net, val_set.X, val_set.y, loss_cfg, nullptr);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw std::runtime_error("train: non-finite epoch loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(EpochStats{epoch, train_loss, val_loss, lr, max_feature_sigma(net)});

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best_net = net;
      since_improve = 0;
    } else if (++since_improve >= cfg.patience) {
      break;
    }
  }

  result.net = std::move(best_net);
  if (result.net.spectral_norm_enabled) {
    for (auto& layer : result.net.feature_layers) spectral_normalize(layer, 50);
  }
  return result;
}

}  // namespace daedl
