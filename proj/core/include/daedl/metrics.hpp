#pragma once

#include <Eigen/Core>
#include <vector>

namespace daedl {

/// Binary-labelled scores; higher score means more positive-class.
struct ScoredBinarySet {
  std::vector<double> scores;
  std::vector<int> labels;  // 0 or 1; needs at least one of each for ranking metrics
};

/// Mann-Whitney AUROC: P(score+ > score-) + 0.5 P(score+ = score-),
/// computed with rank sums and tie correction.
double auroc(const ScoredBinarySet& data);

/// Average precision: sum over descending score thresholds (ties grouped)
/// of precision * delta-recall.
double aupr(const ScoredBinarySet& data);

/// Brier score scaled by 100: 100 * mean_i sum_c (p_ic - y_ic)^2 with one-hot y.
double brier(const Eigen::MatrixXd& probs, const Eigen::VectorXi& labels);

/// Fraction of exact matches.
double accuracy(const Eigen::VectorXi& preds, const Eigen::VectorXi& labels);

}  // namespace daedl
