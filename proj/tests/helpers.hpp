// Test-only oracles kept independent of the library code paths they check:
// Monte Carlo Dirichlet estimates, brute-force ranking metrics, a sphere-search
// spectral-norm oracle, rank correlation, and a reference softmax.
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "daedl/rng.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Dirichlet sampling (Marsaglia-Tsang gamma; log-space for small shapes)

/// Log of a Gamma(shape, 1) draw; shape may be < 1.
inline double log_gamma_draw(daedl::Rng& rng, double shape) {
  // Boost for shape < 1: G(a) = G(a+1) * U^(1/a), done in log space.
  double boost_log = 0.0;
  double k = shape;
  if (k < 1.0) {
    double u = 0.0;
    do {
      u = rng.uniform();
    } while (u <= 0.0);
    boost_log = std::log(u) / k;
    k += 1.0;
  }
  const double d = k - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    const double x = rng.normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x ||
        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return std::log(d * v) + boost_log;
    }
  }
}

/// One Dirichlet(alpha) draw returned as log-probabilities.
inline Eigen::VectorXd dirichlet_log_draw(daedl::Rng& rng, const Eigen::VectorXd& alpha) {
  Eigen::VectorXd logs(alpha.size());
  for (Eigen::Index c = 0; c < alpha.size(); ++c) logs[c] = log_gamma_draw(rng, alpha[c]);
  const double max_log = logs.maxCoeff();
  double sum = 0.0;
  for (Eigen::Index c = 0; c < alpha.size(); ++c) sum += std::exp(logs[c] - max_log);
  const double log_total = max_log + std::log(sum);
  return logs.array() - log_total;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// MC estimate of E_{pi ~ Dir(alpha)} ||y - pi||^2.
inline MonteCarloEstimate mc_expected_mse(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y,
                                          long draws, std::uint64_t seed) {
  daedl::Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (long i = 0; i < draws; ++i) {
    const Eigen::VectorXd log_pi = dirichlet_log_draw(rng, alpha);
    double value = 0.0;
    for (Eigen::Index c = 0; c < alpha.size(); ++c) {
      const double diff = y[c] - std::exp(log_pi[c]);
      value += diff * diff;
    }
    sum += value;
    sum_sq += value * value;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return MonteCarloEstimate{mean, std::sqrt(var / n)};
}

/// MC estimate of KL(Dir(alpha) || Dir(1)) as the mean log density ratio,
/// using std::lgamma rather than the library's special functions.
inline MonteCarloEstimate mc_kl_to_uniform(const Eigen::VectorXd& alpha, long draws,
                                           std::uint64_t seed) {
  daedl::Rng rng(seed);
  const Eigen::Index C = alpha.size();
  double log_norm = std::lgamma(alpha.sum());
  for (Eigen::Index c = 0; c < C; ++c) log_norm -= std::lgamma(alpha[c]);
  const double log_uniform_pdf = std::lgamma(static_cast<double>(C));

  double sum = 0.0, sum_sq = 0.0;
  for (long i = 0; i < draws; ++i) {
    const Eigen::VectorXd log_pi = dirichlet_log_draw(rng, alpha);
    double log_pdf = log_norm;
    for (Eigen::Index c = 0; c < C; ++c) log_pdf += (alpha[c] - 1.0) * log_pi[c];
    const double value = log_pdf - log_uniform_pdf;
    sum += value;
    sum_sq += value * value;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return MonteCarloEstimate{mean, std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------
// Ranking metric oracles

/// O(N^2) pairwise counting version of AUROC.
inline double auroc_pairwise(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

/// Exhaustive threshold-sweep version of average precision.
inline double aupr_threshold_sweep(const std::vector<double>& scores,
                                   const std::vector<int>& labels) {
  std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
  const double total_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  double ap = 0.0;
  double prev_tp = 0.0;
  for (double threshold : thresholds) {
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= threshold) {
        if (labels[i] == 1) {
          tp += 1.0;
        } else {
          fp += 1.0;
        }
      }
    }
    if (tp > prev_tp) {
      const double precision_here = tp / (tp + fp);
      ap += precision_here * ((tp - prev_tp) / total_pos);
    }
    prev_tp = tp;
  }
  return ap;
}

// ---------------------------------------------------------------------------
// Spectral norm oracle: random sphere sampling plus hill-climb refinement.

inline double spectral_norm_search(const Eigen::MatrixXd& W, std::uint64_t seed) {
  daedl::Rng rng(seed);
  const Eigen::Index dim = W.cols();
  auto random_unit = [&] {
    Eigen::VectorXd h(dim);
    for (Eigen::Index i = 0; i < dim; ++i) h[i] = rng.normal();
    const double n = h.norm();
    return n > 0.0 ? Eigen::VectorXd(h / n) : Eigen::VectorXd::Unit(dim, 0).eval();
  };

  Eigen::VectorXd best = random_unit();
  double best_gain = (W * best).norm();
  for (int i = 0; i < 2000; ++i) {
    const Eigen::VectorXd h = random_unit();
    const double gain = (W * h).norm();
    if (gain > best_gain) {
      best_gain = gain;
      best = h;
    }
  }
  double step = 0.5;
  int stale = 0;
  for (int i = 0; i < 20000 && step > 1e-12; ++i) {
    Eigen::VectorXd candidate = best + step * random_unit();
    candidate.normalize();
    const double gain = (W * candidate).norm();
    if (gain > best_gain) {
      best_gain = gain;
      best = candidate;
      stale = 0;
    } else if (++stale >= 40) {
      step *= 0.5;
      stale = 0;
    }
  }
  return best_gain;
}

// ---------------------------------------------------------------------------
// Rank statistics

/// Average ranks (1-based) with ties sharing the mean rank.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean_a;
    const double db = rb[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  return cov / std::sqrt(var_a * var_b);
}

// ---------------------------------------------------------------------------

/// Reference softmax with max-shift.
inline Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const double shift = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - shift).exp();
  return e / e.sum();
}

}  // namespace oracle
