#include "daedl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "daedl/rng.hpp"

namespace daedl {

void LabeledDataset::validate() const {
  if (X.rows() != y.size()) {
    throw std::invalid_argument("LabeledDataset: row/label count mismatch");
  }
  if (!X.allFinite()) {
    throw std::invalid_argument("LabeledDataset: non-finite feature value");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= num_classes) {
      throw std::invalid_argument("LabeledDataset: label out of range at row " + std::to_string(i));
    }
  }
}

LabeledDataset two_moons(int n, double noise_std, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) {
    throw std::invalid_argument("two_moons: n must be a positive even integer");
  }
  if (noise_std < 0.0) {
    throw std::invalid_argument("two_moons: noise_std must be non-negative");
  }
  const int per_class = n / 2;
  LabeledDataset ds;
  ds.X.resize(n, 2);
  ds.y.resize(n);
  ds.num_classes = 2;
  ds.name = "two_moons";

  Rng rng(seed);
  for (int i = 0; i < per_class; ++i) {
    const double t = per_class == 1 ? 0.0 : M_PI * i / (per_class - 1);
    ds.X(i, 0) = std::cos(t);
    ds.X(i, 1) = std::sin(t);
    ds.y[i] = 0;
    ds.X(per_class + i, 0) = 1.0 - std::cos(t);
    ds.X(per_class + i, 1) = 0.5 - std::sin(t);
    ds.y[per_class + i] = 1;
  }
  if (noise_std > 0.0) {
    for (int i = 0; i < n; ++i) {
      ds.X(i, 0) += noise_std * rng.normal();
      ds.X(i, 1) += noise_std * rng.normal();
    }
  }
  return ds;
}

LabeledDataset uniform_ood(int n, const std::vector<std::pair<double, double>>& bounds,
                           std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("uniform_ood: n must be positive");
  if (bounds.empty()) throw std::invalid_argument("uniform_ood: bounds must be non-empty");
  for (const auto& [lo, hi] : bounds) {
    if (!(lo < hi)) throw std::invalid_argument("uniform_ood: need lo < hi per dimension");
  }
  LabeledDataset ds;
  ds.X.resize(n, static_cast<Eigen::Index>(bounds.size()));
  ds.y = Eigen::VectorXi::Zero(n);
  ds.num_classes = 1;
  ds.name = "uniform_ood";

  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < bounds.size(); ++d) {
      ds.X(i, static_cast<Eigen::Index>(d)) = rng.uniform(bounds[d].first, bounds[d].second);
    }
  }
  return ds;
}

LabeledDataset corrupt(const LabeledDataset& ds, const CorruptionSpec& spec, std::uint64_t seed) {
  if (spec.severity < 1 || spec.severity > 5) {
    throw std::invalid_argument("corrupt: severity must be in [1, 5]");
  }
  LabeledDataset out = ds;
  out.name = ds.name + "_corrupt";
  Rng rng(seed);

  switch (spec.kind) {
    case CorruptionKind::gaussian_noise: {
      const Eigen::RowVectorXd mean = ds.X.colwise().mean();
      Eigen::RowVectorXd std_dev(ds.dim());
      for (Eigen::Index d = 0; d < ds.dim(); ++d) {
        const double var = (ds.X.col(d).array() - mean[d]).square().sum() /
                           std::max<Eigen::Index>(1, ds.size() - 1);
        std_dev[d] = std::sqrt(var);
      }
      const double factor = 0.04 * spec.severity;
      for (Eigen::Index i = 0; i < ds.size(); ++i) {
        for (Eigen::Index d = 0; d < ds.dim(); ++d) {
          out.X(i, d) += factor * std_dev[d] * rng.normal();
        }
      }
      break;
    }
    case CorruptionKind::rotation: {
      if (ds.dim() != 2) {
        throw std::invalid_argument("corrupt: rotation requires 2-D inputs");
      }
      const double angle = 6.0 * spec.severity * M_PI / 180.0;
      const double c = std::cos(angle), s = std::sin(angle);
      const Eigen::RowVector2d centroid = ds.X.colwise().mean();
      for (Eigen::Index i = 0; i < ds.size(); ++i) {
        const double dx = ds.X(i, 0) - centroid[0];
        const double dy = ds.X(i, 1) - centroid[1];
        out.X(i, 0) = centroid[0] + c * dx - s * dy;
        out.X(i, 1) = centroid[1] + s * dx + c * dy;
      }
      break;
    }
    case CorruptionKind::pixel_dropout: {
      const std::size_t total = static_cast<std::size_t>(ds.size() * ds.dim());
      const std::size_t k =
          static_cast<std::size_t>(std::llround(0.05 * spec.severity * static_cast<double>(total)));
      std::vector<std::size_t> idx(total);
      std::iota(idx.begin(), idx.end(), 0);
      rng.shuffle(idx);
      for (std::size_t j = 0; j < k && j < total; ++j) {
        const Eigen::Index row = static_cast<Eigen::Index>(idx[j] / ds.dim());
        const Eigen::Index col = static_cast<Eigen::Index>(idx[j] % ds.dim());
        out.X(row, col) = 0.0;
      }
      break;
    }
  }
  return out;
}

SplitResult split(const LabeledDataset& ds, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("split: ratio must lie strictly in (0, 1)");
  }
  ds.validate();

  std::vector<std::vector<Eigen::Index>> by_class(ds.num_classes);
  for (Eigen::Index i = 0; i < ds.size(); ++i) by_class[ds.y[i]].push_back(i);

  Rng rng(seed);
  std::vector<Eigen::Index> train_idx, holdout_idx;
  for (auto& members : by_class) {
    rng.shuffle(members);
    const auto n_train = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(members.size())));
    for (std::size_t j = 0; j < members.size(); ++j) {
      (j < n_train ? train_idx : holdout_idx).push_back(members[j]);
    }
  }
  if (train_idx.empty() || holdout_idx.empty()) {
    throw std::invalid_argument("split: ratio leaves an empty part");
  }

  auto take = [&ds](const std::vector<Eigen::Index>& rows, const std::string& suffix) {
    LabeledDataset part;
    part.X.resize(static_cast<Eigen::Index>(rows.size()), ds.dim());
    part.y.resize(static_cast<Eigen::Index>(rows.size()));
    part.num_classes = ds.num_classes;
    part.name = ds.name + suffix;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      part.X.row(static_cast<Eigen::Index>(j)) = ds.X.row(rows[j]);
      part.y[static_cast<Eigen::Index>(j)] = ds.y[rows[j]];
    }
    return part;
  };
  return SplitResult{take(train_idx, "_train"), take(holdout_idx, "_holdout")};
}

namespace {

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path, std::size_t offset) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw std::runtime_error(path + ": truncated at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
         (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

}  // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("load_idx: cannot open " + images_path);
  const std::uint32_t img_magic = read_be_u32(img, images_path, 0);
  if (img_magic != 0x00000803u) {
    throw std::runtime_error(images_path + ": bad image magic at byte offset 0 (got 0x" +
                             [&] { char b[16]; std::snprintf(b, sizeof b, "%08x", img_magic); return std::string(b); }() +
                             ", want 0x00000803)");
  }
  const std::uint32_t n = read_be_u32(img, images_path, 4);
  const std::uint32_t rows = read_be_u32(img, images_path, 8);
  const std::uint32_t cols = read_be_u32(img, images_path, 12);
  const std::size_t pixels = std::size_t(rows) * cols;

  LabeledDataset ds;
  ds.X.resize(n, static_cast<Eigen::Index>(pixels));
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels))) {
      throw std::runtime_error(images_path + ": truncated at byte offset " +
                               std::to_string(16 + std::size_t(i) * pixels));
    }
    for (std::size_t p = 0; p < pixels; ++p) {
      ds.X(i, static_cast<Eigen::Index>(p)) = buf[p] / 255.0;
    }
  }

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("load_idx: cannot open " + labels_path);
  const std::uint32_t lab_magic = read_be_u32(lab, labels_path, 0);
  if (lab_magic != 0x00000801u) {
    throw std::runtime_error(labels_path + ": bad label magic at byte offset 0");
  }
  const std::uint32_t n_labels = read_be_u32(lab, labels_path, 4);
  if (n_labels != n) {
    throw std::runtime_error("load_idx: image count " + std::to_string(n) +
                             " does not match label count " + std::to_string(n_labels));
  }
  ds.y.resize(n);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    unsigned char b;
    if (!lab.read(reinterpret_cast<char*>(&b), 1)) {
      throw std::runtime_error(labels_path + ": truncated at byte offset " + std::to_string(8 + i));
    }
    ds.y[i] = b;
    max_label = std::max(max_label, int(b));
  }
  ds.num_classes = max_label + 1;
  ds.name = "idx";
  return ds;
}

LabeledDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);

  Eigen::Index dim = 0;
  {
    std::stringstream header(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(header, col, ',')) cols.push_back(col);
    if (cols.size() < 2 || cols.back() != "label") {
      throw std::runtime_error("load_csv: header must be x0,...,x{D-1},label");
    }
    dim = static_cast<Eigen::Index>(cols.size()) - 1;
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    Eigen::Index col = 0;
    while (std::getline(row, cell, ',')) {
      if (col < dim) {
        values.push_back(std::stod(cell));
      } else {
        labels.push_back(std::stoi(cell));
      }
      ++col;
    }
    if (col != dim + 1) {
      throw std::runtime_error("load_csv: wrong column count on line " + std::to_string(line_no));
    }
  }

  LabeledDataset ds;
  const auto n = static_cast<Eigen::Index>(labels.size());
  ds.X.resize(n, dim);
  ds.y.resize(n);
  int max_label = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index d = 0; d < dim; ++d) ds.X(i, d) = values[i * dim + d];
    ds.y[i] = labels[i];
    max_label = std::max(max_label, labels[i]);
  }
  ds.num_classes = max_label + 1;
  ds.name = path;
  ds.validate();
  return ds;
}

void save_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  for (Eigen::Index d = 0; d < ds.dim(); ++d) out << "x" << d << ",";
  out << "label\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index d = 0; d < ds.dim(); ++d) out << ds.X(i, d) << ",";
    out << ds.y[i] << "\n";
  }
}

}  // namespace daedl
