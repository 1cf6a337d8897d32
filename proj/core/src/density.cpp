#include "daedl/density.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace daedl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

/// Cholesky with trace-scaled jitter escalation (eps, 10*eps, ... up to 5 raises).
Eigen::MatrixXd regularized_cholesky(const Eigen::MatrixXd& cov, int class_index) {
  const double scale = cov.trace() / static_cast<double>(cov.rows());
  double eps = 1e-6;
  for (int attempt = 0; attempt <= 5; ++attempt) {
    Eigen::MatrixXd reg = cov;
    reg.diagonal().array() += eps * (scale > 0.0 ? scale : 1.0);
    Eigen::LLT<Eigen::MatrixXd> llt(reg);
    if (llt.info() == Eigen::Success) {
      return llt.matrixL();
    }
    eps *= 10.0;
  }
  throw std::runtime_error("GdaModel::fit: Cholesky failed for class " +
                           std::to_string(class_index) + " after jitter escalation");
}

}  // namespace

GdaModel& GdaModel::operator=(const GdaModel& other) {
  if (this == &other) return *this;
  weights_ = other.weights_;
  weights_vec_ = other.weights_vec_;
  means_ = other.means_;
  cov_factors_ = other.cov_factors_;
  log_dets_ = other.log_dets_;
  d_min_ = other.d_min_;
  d_max_ = other.d_max_;
  warned_degenerate_.store(other.warned_degenerate_.load());
  return *this;
}

GdaModel& GdaModel::operator=(GdaModel&& other) noexcept {
  if (this == &other) return *this;
  weights_ = std::move(other.weights_);
  weights_vec_ = std::move(other.weights_vec_);
  means_ = std::move(other.means_);
  cov_factors_ = std::move(other.cov_factors_);
  log_dets_ = std::move(other.log_dets_);
  d_min_ = other.d_min_;
  d_max_ = other.d_max_;
  warned_degenerate_.store(other.warned_degenerate_.load());
  return *this;
}

GdaModel GdaModel::fit(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                       int num_classes) {
  const Eigen::Index n = features.rows();
  const Eigen::Index h = features.cols();
  if (n != labels.size()) throw std::invalid_argument("GdaModel::fit: row/label count mismatch");
  if (num_classes < 1) throw std::invalid_argument("GdaModel::fit: need at least one class");
  if (!features.allFinite()) throw std::invalid_argument("GdaModel::fit: non-finite feature");

  std::vector<Eigen::Index> counts(num_classes, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw std::invalid_argument("GdaModel::fit: label out of range at row " + std::to_string(i));
    }
    ++counts[labels[i]];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] < 2) {
      throw std::invalid_argument("GdaModel::fit: class " + std::to_string(c) +
                                  " has fewer than 2 samples");
    }
  }

  GdaModel model;
  model.weights_.resize(num_classes);
  model.weights_vec_.resize(num_classes);
  model.means_.resize(num_classes);
  model.cov_factors_.resize(num_classes);
  model.log_dets_.resize(num_classes);

  for (int c = 0; c < num_classes; ++c) {
    model.weights_[c] = static_cast<double>(counts[c]) / static_cast<double>(n);
    model.weights_vec_[c] = model.weights_[c];

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(h);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels[i] == c) mean += features.row(i).transpose();
    }
    mean /= static_cast<double>(counts[c]);
    model.means_[c] = mean;

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(h, h);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels[i] == c) {
        const Eigen::VectorXd centered = features.row(i).transpose() - mean;
        cov.noalias() += centered * centered.transpose();
      }
    }
    cov /= static_cast<double>(counts[c] - 1);

    model.cov_factors_[c] = regularized_cholesky(cov, c);
    model.log_dets_[c] = 2.0 * model.cov_factors_[c].diagonal().array().log().sum();
  }

  model.d_min_ = std::numeric_limits<double>::infinity();
  model.d_max_ = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lp = model.log_density(features.row(i).transpose());
    model.d_min_ = std::min(model.d_min_, lp);
    model.d_max_ = std::max(model.d_max_, lp);
  }
  return model;
}

GdaModel GdaModel::from_parts(Eigen::VectorXd weights, std::vector<Eigen::VectorXd> means,
                              std::vector<Eigen::MatrixXd> cov_factors, double d_min,
                              double d_max) {
  const auto c = static_cast<std::size_t>(weights.size());
  if (means.size() != c || cov_factors.size() != c || c == 0) {
    throw std::invalid_argument("GdaModel::from_parts: inconsistent class counts");
  }
  if (d_min > d_max) throw std::invalid_argument("GdaModel::from_parts: d_min > d_max");
  GdaModel model;
  model.weights_vec_ = std::move(weights);
  model.weights_.assign(model.weights_vec_.data(), model.weights_vec_.data() + c);
  model.means_ = std::move(means);
  model.cov_factors_ = std::move(cov_factors);
  model.log_dets_.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    model.log_dets_[k] = 2.0 * model.cov_factors_[k].diagonal().array().log().sum();
  }
  model.d_min_ = d_min;
  model.d_max_ = d_max;
  return model;
}

double GdaModel::log_density(const Eigen::VectorXd& z) const {
  if (!z.allFinite()) throw std::invalid_argument("GdaModel::log_density: non-finite input");
  if (z.size() != feature_dim()) {
    throw std::invalid_argument("GdaModel::log_density: dimension mismatch");
  }
  const double h = static_cast<double>(z.size());
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(weights_.size());
  for (std::size_t c = 0; c < weights_.size(); ++c) {
    // Mahalanobis^2 via forward solve with the Cholesky factor.
    const Eigen::VectorXd w = cov_factors_[c]
                                  .triangularView<Eigen::Lower>()
                                  .solve(z - means_[c]);
    const double maha2 = w.squaredNorm();
    terms[c] = std::log(weights_[c]) - 0.5 * (h * kLog2Pi + log_dets_[c] + maha2);
    max_term = std::max(max_term, terms[c]);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  return max_term + std::log(sum);
}

double GdaModel::normalize(double log_p) const {
  if (d_min_ == d_max_) {
    if (!warned_degenerate_.exchange(true)) {
      std::cerr << "GdaModel::normalize: degenerate training density range (d_min == d_max)\n";
    }
    return log_p >= d_max_ ? 1.0 : 0.0;
  }
  const double s = (log_p - d_min_) / (d_max_ - d_min_);
  return std::max(0.0, std::min(1.0, s));
}

}  // namespace daedl
