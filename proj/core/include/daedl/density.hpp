#pragma once

#include <Eigen/Core>
#include <atomic>
#include <vector>

namespace daedl {

/// Per-class Gaussian discriminant model over feature vectors, with the
/// training log-density range used for min-max normalization.
class GdaModel {
 public:
  /// Fits class priors N_c/N, class means, and covariances with 1/(N_c - 1)
  /// normalization; covariances receive trace-scaled jitter until the
  /// Cholesky factorization succeeds. d_min/d_max are the extremes of
  /// log_density over the same training features.
  static GdaModel fit(const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                      int num_classes);

  /// Log of the Gaussian mixture density, via per-class log-pdfs combined
  /// with log-sum-exp. Finite for any finite input.
  double log_density(const Eigen::VectorXd& z) const;

  /// Min-max normalized, clipped density scale:
  /// s = Clip((log_p - d_min) / (d_max - d_min)) in [0, 1].
  double normalize(double log_p) const;

  int num_classes() const { return static_cast<int>(weights_.size()); }
  Eigen::Index feature_dim() const { return means_.empty() ? 0 : means_[0].size(); }
  const Eigen::VectorXd& weights() const { return weights_vec_; }
  const std::vector<Eigen::VectorXd>& means() const { return means_; }
  const std::vector<Eigen::MatrixXd>& cov_factors() const { return cov_factors_; }
  const std::vector<double>& log_dets() const { return log_dets_; }
  double d_min() const { return d_min_; }
  double d_max() const { return d_max_; }

  /// Used by checkpoint deserialization; validates shape consistency.
  static GdaModel from_parts(Eigen::VectorXd weights, std::vector<Eigen::VectorXd> means,
                             std::vector<Eigen::MatrixXd> cov_factors, double d_min, double d_max);

  GdaModel(const GdaModel& other) { *this = other; }
  GdaModel(GdaModel&& other) noexcept { *this = std::move(other); }
  GdaModel& operator=(const GdaModel& other);
  GdaModel& operator=(GdaModel&& other) noexcept;

 private:
  GdaModel() = default;

  std::vector<double> weights_;          // class priors, sum to 1
  Eigen::VectorXd weights_vec_;          // same values, vector form
  std::vector<Eigen::VectorXd> means_;   // per-class mean, length H
  std::vector<Eigen::MatrixXd> cov_factors_;  // lower-triangular Cholesky factors
  std::vector<double> log_dets_;         // log det of each covariance
  double d_min_ = 0.0;
  double d_max_ = 0.0;
  mutable std::atomic<bool> warned_degenerate_{false};
};

}  // namespace daedl
