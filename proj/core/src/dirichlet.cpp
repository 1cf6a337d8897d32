#include "daedl/dirichlet.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "daedl/numeric_log.hpp"
#include "daedl/special.hpp"

namespace daedl {

namespace {

std::atomic<std::uint64_t> g_event_counts[2] = {};

constexpr double kAlphaFloor = 1e-30;
constexpr double kAlphaCeil = 1e300;

double floored(double a) {
  if (a < kAlphaFloor) {
    log_numeric_event(NumericEvent::alpha_floor_clamp);
    return kAlphaFloor;
  }
  return a;
}

// exp() of diverged logits is capped so the overflow surfaces as a non-finite
// loss (checked by the trainer) rather than an invariant violation
double clamped(double a) {
  if (a > kAlphaCeil) {
    log_numeric_event(NumericEvent::exp_range_clamp);
    return kAlphaCeil;
  }
  return floored(a);
}

}  // namespace

void log_numeric_event(NumericEvent ev) {
  g_event_counts[static_cast<int>(ev)].fetch_add(1, std::memory_order_relaxed);
}

std::uint64_t numeric_event_count(NumericEvent ev) {
  return g_event_counts[static_cast<int>(ev)].load(std::memory_order_relaxed);
}

void reset_numeric_event_counts() {
  for (auto& c : g_event_counts) c.store(0, std::memory_order_relaxed);
}

ConcentrationVector::ConcentrationVector(Eigen::VectorXd alpha) : alpha_(std::move(alpha)) {
  if (alpha_.size() < 2) {
    throw std::invalid_argument("ConcentrationVector: need at least 2 classes, got " +
                                std::to_string(alpha_.size()));
  }
  for (Eigen::Index c = 0; c < alpha_.size(); ++c) {
    if (!(alpha_[c] > 0.0) || !std::isfinite(alpha_[c])) {
      throw std::invalid_argument("ConcentrationVector: component " + std::to_string(c) +
                                  " must be positive and finite, got " + std::to_string(alpha_[c]));
    }
  }
}

OneHotLabel::OneHotLabel(Eigen::VectorXd y) : y_(std::move(y)), true_class_(-1) {
  if (y_.size() < 2) {
    throw std::invalid_argument("OneHotLabel: need at least 2 classes");
  }
  for (Eigen::Index c = 0; c < y_.size(); ++c) {
    if (y_[c] == 1.0) {
      if (true_class_ >= 0) throw std::invalid_argument("OneHotLabel: more than one hot component");
      true_class_ = c;
    } else if (y_[c] != 0.0) {
      throw std::invalid_argument("OneHotLabel: components must be 0 or 1");
    }
  }
  if (true_class_ < 0) throw std::invalid_argument("OneHotLabel: no hot component");
}

OneHotLabel OneHotLabel::from_index(Eigen::Index true_class, Eigen::Index num_classes) {
  if (true_class < 0 || true_class >= num_classes) {
    throw std::invalid_argument("OneHotLabel: class index out of range");
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(num_classes);
  y[true_class] = 1.0;
  return OneHotLabel(std::move(y));
}

Eigen::VectorXd expected_probs(const ConcentrationVector& alpha) {
  return alpha.values() / alpha.values().sum();
}

double precision(const ConcentrationVector& alpha) { return alpha.values().sum(); }

BeliefMasses belief_uncertainty(const Eigen::VectorXd& evidence) {
  const auto C = evidence.size();
  if (C < 2) throw std::invalid_argument("belief_uncertainty: need at least 2 classes");
  for (Eigen::Index c = 0; c < C; ++c) {
    if (!(evidence[c] >= 0.0) || !std::isfinite(evidence[c])) {
      throw std::invalid_argument("belief_uncertainty: evidence must be non-negative and finite");
    }
  }
  const double alpha0 = static_cast<double>(C) + evidence.sum();
  return BeliefMasses{evidence / alpha0, static_cast<double>(C) / alpha0};
}

ConcentrationVector masked_alpha(const ConcentrationVector& alpha, const OneHotLabel& y) {
  if (alpha.classes() != y.classes()) {
    throw std::invalid_argument("masked_alpha: length mismatch");
  }
  Eigen::VectorXd masked = alpha.values();
  masked[y.true_class()] = 1.0;
  return ConcentrationVector(std::move(masked));
}

double expected_mse(const ConcentrationVector& alpha, const OneHotLabel& y) {
  if (alpha.classes() != y.classes()) {
    throw std::invalid_argument("expected_mse: length mismatch");
  }
  const Eigen::VectorXd p = expected_probs(alpha);
  const double alpha0 = precision(alpha);
  double loss = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    const double diff = y.values()[c] - p[c];
    loss += diff * diff + p[c] * (1.0 - p[c]) / (alpha0 + 1.0);
  }
  return loss;
}

double kl_to_uniform(const ConcentrationVector& alpha) {
  const auto C = alpha.classes();
  double alpha0 = 0.0;
  for (Eigen::Index c = 0; c < C; ++c) alpha0 += floored(alpha.values()[c]);
  double kl = log_gamma(alpha0) - log_gamma(static_cast<double>(C));
  const double psi0 = digamma(alpha0);
  for (Eigen::Index c = 0; c < C; ++c) {
    const double a = floored(alpha.values()[c]);
    kl += -log_gamma(a) + (a - 1.0) * (digamma(a) - psi0);
  }
  return kl;
}

double edl_loss(const ConcentrationVector& alpha, const OneHotLabel& y, const LossConfig& cfg) {
  if (cfg.lambda < 0.0) throw std::invalid_argument("edl_loss: lambda must be non-negative");
  double loss = expected_mse(alpha, y);
  if (cfg.lambda > 0.0) {
    loss += cfg.lambda * kl_to_uniform(masked_alpha(alpha, y));
  }
  return loss;
}

Eigen::VectorXd loss_grad_wrt_alpha(const ConcentrationVector& alpha, const OneHotLabel& y,
                                    const LossConfig& cfg) {
  if (cfg.lambda < 0.0) throw std::invalid_argument("loss_grad_wrt_alpha: lambda must be non-negative");
  if (alpha.classes() != y.classes()) {
    throw std::invalid_argument("loss_grad_wrt_alpha: length mismatch");
  }
  const auto C = alpha.classes();
  const Eigen::VectorXd& a = alpha.values();
  const double alpha0 = a.sum();
  const Eigen::VectorXd p = a / alpha0;

  // Expected-MSE part. With dp_c/da_k = (delta_ck - p_c)/alpha0:
  //   d/da_k sum_c (y_c - p_c)^2            = sum_c -2 (y_c - p_c) dp_c/da_k
  //   d/da_k sum_c p_c(1-p_c)/(alpha0+1)    = sum_c (1-2p_c) dp_c/da_k /(alpha0+1)
  //                                           - sum_c p_c(1-p_c)/(alpha0+1)^2
  const double ap1 = alpha0 + 1.0;
  double sum_var = 0.0;       // sum p_c (1 - p_c)
  double dot_res_p = 0.0;     // sum (y_c - p_c) p_c
  double dot_onetwo_p = 0.0;  // sum (1 - 2 p_c) p_c
  for (Eigen::Index c = 0; c < C; ++c) {
    sum_var += p[c] * (1.0 - p[c]);
    dot_res_p += (y.values()[c] - p[c]) * p[c];
    dot_onetwo_p += (1.0 - 2.0 * p[c]) * p[c];
  }

  Eigen::VectorXd grad(C);
  for (Eigen::Index k = 0; k < C; ++k) {
    const double residual_term = -2.0 * ((y.values()[k] - p[k]) - dot_res_p) / alpha0;
    const double variance_term =
        ((1.0 - 2.0 * p[k]) - dot_onetwo_p) / (alpha0 * ap1) - sum_var / (ap1 * ap1);
    grad[k] = residual_term + variance_term;
  }

  if (cfg.lambda > 0.0) {
    // KL part flows only through non-true classes; the mask pins the true
    // class at 1. With at = masked alpha and at0 its sum:
    //   dKL/da_k = (a_k - 1) psi'(a_k) - (at0 - C) psi'(at0).
    const ConcentrationVector masked = masked_alpha(alpha, y);
    const double at0 = masked.values().sum();
    const double common = (at0 - static_cast<double>(C)) * trigamma(at0);
    for (Eigen::Index k = 0; k < C; ++k) {
      if (k == y.true_class()) continue;
      grad[k] += cfg.lambda * ((a[k] - 1.0) * trigamma(floored(a[k])) - common);
    }
  }
  return grad;
}

Eigen::VectorXd loss_grad_wrt_logits(const Eigen::VectorXd& logits, const OneHotLabel& y,
                                     const LossConfig& cfg, double scale) {
  if (!logits.allFinite()) {
    throw std::invalid_argument("loss_grad_wrt_logits: logits must be finite");
  }
  if (logits.size() != y.classes()) {
    throw std::invalid_argument("loss_grad_wrt_logits: length mismatch");
  }
  if (scale == 0.0) return Eigen::VectorXd::Zero(logits.size());

  Eigen::VectorXd a(logits.size());
  for (Eigen::Index c = 0; c < logits.size(); ++c) {
    a[c] = clamped(std::exp(logits[c] * scale));
  }
  const ConcentrationVector alpha(a);
  const Eigen::VectorXd dl_da = loss_grad_wrt_alpha(alpha, y, cfg);
  // d alpha_k / d z_k = scale * alpha_k (diagonal Jacobian).
  return dl_da.cwiseProduct(a) * scale;
}

double categorical_entropy(const Eigen::VectorXd& probs) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < probs.size(); ++c) {
    if (!(probs[c] >= 0.0) || !std::isfinite(probs[c])) {
      throw std::invalid_argument("categorical_entropy: probabilities must be non-negative");
    }
    sum += probs[c];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("categorical_entropy: probabilities must sum to 1, got " +
                                std::to_string(sum));
  }
  double h = 0.0;
  for (Eigen::Index c = 0; c < probs.size(); ++c) {
    if (probs[c] > 0.0) h -= probs[c] * std::log(probs[c]);
  }
  return h;
}

}  // namespace daedl
