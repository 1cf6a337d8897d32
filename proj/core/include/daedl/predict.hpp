#pragma once

#include <Eigen/Core>

#include "daedl/density.hpp"
#include "daedl/dirichlet.hpp"
#include "daedl/network.hpp"

namespace daedl {

struct PredictionOutput {
  Eigen::VectorXd alpha;     // concentration parameters
  Eigen::VectorXd probs;     // expected class probabilities
  double aleatoric_conf;     // max expected class probability
  double epistemic_conf;     // Dirichlet precision alpha_0
  double entropy;            // predictive entropy of probs
  double s;                  // density scale in [0, 1]
  int predicted_class;       // argmax of probs, lowest index on ties
};

/// Training-mode concentrations alpha = exp(z), clamped to [1e-30, 1e300].
ConcentrationVector alpha_train(const Eigen::VectorXd& logits);

/// Prediction-mode concentrations alpha = exp(z * s) for s in [0, 1].
/// s = 0 yields the all-ones vector (uniform predictive distribution).
ConcentrationVector alpha_predict(const Eigen::VectorXd& logits, double s);

enum class EvidenceActivation { relu, softplus };

/// Conventional evidential concentrations alpha = 1 + h(z).
ConcentrationVector alpha_edl_conventional(const Eigen::VectorXd& logits, EvidenceActivation h);

/// Concentrations for any parameterization; s only affects the exp scheme.
ConcentrationVector alpha_for(Parameterization parameterization, const Eigen::VectorXd& logits,
                              double s);

/// Scores from externally supplied density scale (s = 1 reproduces training mode).
PredictionOutput predict_with_scale(const EvidentialNetwork& net, const Eigen::VectorXd& x,
                                    double s);

/// Full density-aware prediction: forward, log density, normalized scale,
/// scaled concentrations, uncertainty scores.
PredictionOutput predict(const EvidentialNetwork& net, const GdaModel& gda,
                         const Eigen::VectorXd& x);

enum class PseudoCountPrior { zeros, ones };

/// alpha minus the prior pseudo-counts: zeros returns alpha itself, ones
/// returns alpha - 1 (errors when any component would go negative).
Eigen::VectorXd pseudo_counts(const ConcentrationVector& alpha, PseudoCountPrior prior);

}  // namespace daedl
