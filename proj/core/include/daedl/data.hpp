#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace daedl {

struct LabeledDataset {
  Eigen::MatrixXd X;   // N x D, finite
  Eigen::VectorXi y;   // N, values in [0, num_classes)
  int num_classes = 0;
  std::string name;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
  void validate() const;
};

enum class CorruptionKind { gaussian_noise, rotation, pixel_dropout };

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::gaussian_noise;
  int severity = 1;  // 1..5
};

/// Interleaved two-moons dataset: n/2 points per class on unit semicircles
/// (class 0 at (cos t, sin t), class 1 at (1 - cos t, 0.5 - sin t) for
/// t in [0, pi]) plus isotropic Gaussian noise of the given std.
LabeledDataset two_moons(int n, double noise_std, std::uint64_t seed);

/// i.i.d. uniform samples within per-dimension [lo, hi] bounds.
/// All labels are 0 and the dataset is named as OOD.
LabeledDataset uniform_ood(int n, const std::vector<std::pair<double, double>>& bounds,
                           std::uint64_t seed);

/// Severity-scaled corruption; labels and size are never altered.
///   gaussian_noise: adds noise with std 0.04 * severity * per-dimension data std
///   rotation:       rotates 2-D inputs by 6 degrees * severity about the centroid
///   pixel_dropout:  zeroes a fraction 0.05 * severity of all coordinates
LabeledDataset corrupt(const LabeledDataset& ds, const CorruptionSpec& spec, std::uint64_t seed);

struct SplitResult {
  LabeledDataset train;
  LabeledDataset holdout;
};

/// Seeded, class-stratified partition; per-class ratios hold within one sample.
SplitResult split(const LabeledDataset& ds, double ratio, std::uint64_t seed);

/// Big-endian IDX container (magic 0x00000803 images / 0x00000801 labels).
/// Images are flattened row-major and scaled to [0, 1] by dividing by 255.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// CSV dataset with header row `x0,...,x{D-1},label`.
LabeledDataset load_csv(const std::string& path);
void save_csv(const LabeledDataset& ds, const std::string& path);

}  // namespace daedl
