#pragma once

#include <Eigen/Core>

namespace daedl {

/// Strictly positive Dirichlet concentration parameters over C >= 2 classes.
class ConcentrationVector {
 public:
  explicit ConcentrationVector(Eigen::VectorXd alpha);

  const Eigen::VectorXd& values() const { return alpha_; }
  Eigen::Index classes() const { return alpha_.size(); }

 private:
  Eigen::VectorXd alpha_;
};

/// One-hot class label: exactly one component equals 1, the rest 0.
class OneHotLabel {
 public:
  explicit OneHotLabel(Eigen::VectorXd y);
  static OneHotLabel from_index(Eigen::Index true_class, Eigen::Index num_classes);

  const Eigen::VectorXd& values() const { return y_; }
  Eigen::Index classes() const { return y_.size(); }
  Eigen::Index true_class() const { return true_class_; }

 private:
  Eigen::VectorXd y_;
  Eigen::Index true_class_;
};

struct LossConfig {
  double lambda = 5e-2;  // KL regularization weight, >= 0
};

/// Expected class probabilities alpha_c / alpha_0.
Eigen::VectorXd expected_probs(const ConcentrationVector& alpha);

/// Dirichlet precision alpha_0 = sum of concentrations.
double precision(const ConcentrationVector& alpha);

struct BeliefMasses {
  Eigen::VectorXd belief;  // b_c = e_c / alpha_0
  double uncertainty;      // u = C / alpha_0
};

/// Subjective-logic belief/uncertainty masses from non-negative evidence,
/// with alpha_c = 1 + e_c. Satisfies u + sum(b) = 1.
BeliefMasses belief_uncertainty(const Eigen::VectorXd& evidence);

/// Replaces the true-class concentration by 1, leaving the rest unchanged.
ConcentrationVector masked_alpha(const ConcentrationVector& alpha, const OneHotLabel& y);

/// E_{pi ~ Dir(alpha)} ||y - pi||^2 in closed form:
/// sum_c (y_c - p_c)^2 + p_c (1 - p_c) / (alpha_0 + 1) with p = expected_probs.
double expected_mse(const ConcentrationVector& alpha, const OneHotLabel& y);

/// KL( Dir(alpha) || Dir(1) ), computed with log-gamma and digamma.
/// Zero exactly at the all-ones vector.
double kl_to_uniform(const ConcentrationVector& alpha);

/// expected_mse(alpha, y) + lambda * kl_to_uniform(masked_alpha(alpha, y)).
double edl_loss(const ConcentrationVector& alpha, const OneHotLabel& y, const LossConfig& cfg);

/// Gradient of edl_loss with respect to the concentration parameters.
Eigen::VectorXd loss_grad_wrt_alpha(const ConcentrationVector& alpha, const OneHotLabel& y,
                                    const LossConfig& cfg);

/// Gradient of edl_loss(exp(z * s), y, cfg) with respect to the logits z.
/// Training uses s = 1; s = 0 gives a zero vector.
Eigen::VectorXd loss_grad_wrt_logits(const Eigen::VectorXd& logits, const OneHotLabel& y,
                                     const LossConfig& cfg, double scale);

/// Shannon entropy -sum p log p with 0 log 0 := 0. Input must lie on the simplex.
double categorical_entropy(const Eigen::VectorXd& probs);

}  // namespace daedl
