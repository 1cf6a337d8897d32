#include "daedl/predict.hpp"

#include <cmath>
#include <stdexcept>

#include "daedl/numeric_log.hpp"

namespace daedl {

namespace {

constexpr double kExpLo = 1e-30;
constexpr double kExpHi = 1e300;

double clamped_exp(double v) {
  double e = std::exp(v);
  if (e < kExpLo) {
    log_numeric_event(NumericEvent::exp_range_clamp);
    return kExpLo;
  }
  if (e > kExpHi) {
    log_numeric_event(NumericEvent::exp_range_clamp);
    return kExpHi;
  }
  return e;
}

void check_finite(const Eigen::VectorXd& logits, const char* fn) {
  if (!logits.allFinite()) {
    throw std::invalid_argument(std::string(fn) + ": logits must be finite");
  }
}

double softplus(double v) {
  // log(1 + exp(v)) without overflow.
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

}  // namespace

ConcentrationVector alpha_train(const Eigen::VectorXd& logits) {
  check_finite(logits, "alpha_train");
  Eigen::VectorXd a(logits.size());
  for (Eigen::Index c = 0; c < logits.size(); ++c) a[c] = clamped_exp(logits[c]);
  return ConcentrationVector(std::move(a));
}

ConcentrationVector alpha_predict(const Eigen::VectorXd& logits, double s) {
  check_finite(logits, "alpha_predict");
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument("alpha_predict: s must lie in [0, 1]");
  }
  Eigen::VectorXd a(logits.size());
  for (Eigen::Index c = 0; c < logits.size(); ++c) a[c] = clamped_exp(logits[c] * s);
  return ConcentrationVector(std::move(a));
}

ConcentrationVector alpha_edl_conventional(const Eigen::VectorXd& logits, EvidenceActivation h) {
  check_finite(logits, "alpha_edl_conventional");
  Eigen::VectorXd a(logits.size());
  for (Eigen::Index c = 0; c < logits.size(); ++c) {
    const double e = h == EvidenceActivation::relu ? std::max(0.0, logits[c]) : softplus(logits[c]);
    a[c] = 1.0 + e;
  }
  return ConcentrationVector(std::move(a));
}

ConcentrationVector alpha_for(Parameterization parameterization, const Eigen::VectorXd& logits,
                              double s) {
  switch (parameterization) {
    case Parameterization::exp:
      return alpha_predict(logits, s);
    case Parameterization::relu_plus_one:
      return alpha_edl_conventional(logits, EvidenceActivation::relu);
    case Parameterization::softplus_plus_one:
      return alpha_edl_conventional(logits, EvidenceActivation::softplus);
  }
  throw std::invalid_argument("alpha_for: unknown parameterization");
}

namespace {

PredictionOutput scores_from_alpha(ConcentrationVector alpha, double s) {
  PredictionOutput out;
  out.probs = expected_probs(alpha);
  out.aleatoric_conf = out.probs.maxCoeff();
  out.epistemic_conf = precision(alpha);
  out.entropy = categorical_entropy(out.probs);
  out.s = s;
  out.predicted_class = 0;
  for (Eigen::Index c = 1; c < out.probs.size(); ++c) {
    if (out.probs[c] > out.probs[out.predicted_class]) out.predicted_class = static_cast<int>(c);
  }
  out.alpha = alpha.values();
  return out;
}

}  // namespace

PredictionOutput predict_with_scale(const EvidentialNetwork& net, const Eigen::VectorXd& x,
                                    double s) {
  const ForwardResult f = forward(net, x);
  return scores_from_alpha(alpha_for(net.parameterization, f.logits, s), s);
}

PredictionOutput predict(const EvidentialNetwork& net, const GdaModel& gda,
                         const Eigen::VectorXd& x) {
  if (gda.feature_dim() != net.feature_dim()) {
    throw std::invalid_argument("predict: GDA feature dimension does not match the network");
  }
  const ForwardResult f = forward(net, x);
  const double s = gda.normalize(gda.log_density(f.features));
  return scores_from_alpha(alpha_for(net.parameterization, f.logits, s), s);
}

Eigen::VectorXd pseudo_counts(const ConcentrationVector& alpha, PseudoCountPrior prior) {
  if (prior == PseudoCountPrior::zeros) return alpha.values();
  for (Eigen::Index c = 0; c < alpha.classes(); ++c) {
    if (alpha.values()[c] < 1.0) {
      throw std::invalid_argument("pseudo_counts: component " + std::to_string(c) +
                                  " below 1 gives a negative count under the ones prior");
    }
  }
  return alpha.values().array() - 1.0;
}

}  // namespace daedl
