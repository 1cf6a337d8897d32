#include "daedl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace daedl {

namespace {

void check_binary(const ScoredBinarySet& data, const char* fn) {
  if (data.scores.size() != data.labels.size()) {
    throw std::invalid_argument(std::string(fn) + ": score/label count mismatch");
  }
  std::size_t positives = 0;
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] != 0 && data.labels[i] != 1) {
      throw std::invalid_argument(std::string(fn) + ": labels must be 0 or 1");
    }
    if (!std::isfinite(data.scores[i])) {
      throw std::invalid_argument(std::string(fn) + ": scores must be finite");
    }
    positives += static_cast<std::size_t>(data.labels[i]);
  }
  if (positives == 0 || positives == data.labels.size()) {
    throw std::invalid_argument(std::string(fn) + ": need at least one positive and one negative");
  }
}

}  // namespace

double auroc(const ScoredBinarySet& data) {
  check_binary(data, "auroc");
  const std::size_t n = data.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data.scores[a] < data.scores[b]; });

  // Rank sum of positives with average ranks over tie groups.
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && data.scores[order[j]] == data.scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (data.labels[order[k]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const double n_neg = static_cast<double>(n - n_pos);
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * n_neg);
}

double aupr(const ScoredBinarySet& data) {
  check_binary(data, "aupr");
  const std::size_t n = data.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data.scores[a] > data.scores[b]; });

  const double total_pos = static_cast<double>(
      std::count(data.labels.begin(), data.labels.end(), 1));

  double ap = 0.0;
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double group_tp = 0.0, group_fp = 0.0;
    while (j < n && data.scores[order[j]] == data.scores[order[i]]) {
      if (data.labels[order[j]] == 1) {
        group_tp += 1.0;
      } else {
        group_fp += 1.0;
      }
      ++j;
    }
    tp += group_tp;
    fp += group_fp;
    if (group_tp > 0.0) {
      const double precision_here = tp / (tp + fp);
      ap += precision_here * (group_tp / total_pos);
    }
    i = j;
  }
  return ap;
}

double brier(const Eigen::MatrixXd& probs, const Eigen::VectorXi& labels) {
  if (probs.rows() != labels.size()) {
    throw std::invalid_argument("brier: row/label count mismatch");
  }
  if (probs.rows() == 0) throw std::invalid_argument("brier: empty input");
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double row_sum = probs.row(i).sum();
    if (std::abs(row_sum - 1.0) > 1e-9 || probs.row(i).minCoeff() < 0.0) {
      throw std::invalid_argument("brier: row " + std::to_string(i) +
                                  " is not a probability vector");
    }
    if (labels[i] < 0 || labels[i] >= probs.cols()) {
      throw std::invalid_argument("brier: label out of range at row " + std::to_string(i));
    }
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      const double y = (c == labels[i]) ? 1.0 : 0.0;
      const double diff = probs(i, c) - y;
      total += diff * diff;
    }
  }
  return 100.0 * total / static_cast<double>(probs.rows());
}

double accuracy(const Eigen::VectorXi& preds, const Eigen::VectorXi& labels) {
  if (preds.size() != labels.size()) {
    throw std::invalid_argument("accuracy: length mismatch");
  }
  if (preds.size() == 0) throw std::invalid_argument("accuracy: empty input");
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < preds.size(); ++i) {
    if (preds[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace daedl
