#include "daedl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace daedl {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'E', 'D', 'L', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("save_checkpoint: cannot open " + path);
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void i32(std::int32_t v) { bytes(&v, 4); }
  void f64(double v) { bytes(&v, 8); }
  void vec(const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void mat(const Eigen::MatrixXd& m) {  // row-major
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
  }
  bool good() const { return static_cast<bool>(out_); }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("load_checkpoint: cannot open " + path);
  }
  void bytes(void* p, std::size_t n) {
    if (!in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n))) {
      throw std::runtime_error("load_checkpoint: " + path_ + " truncated");
    }
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  std::int32_t i32() { std::int32_t v; bytes(&v, 4); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  Eigen::VectorXd vec(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = f64();
    return v;
  }
  Eigen::MatrixXd mat(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64();
    }
    return m;
  }

 private:
  std::ifstream in_;
  std::string path_;
};

void write_layer(Writer& w, const DenseLayer& layer) {
  w.u32(static_cast<std::uint32_t>(layer.W.rows()));
  w.u32(static_cast<std::uint32_t>(layer.W.cols()));
  w.u8(layer.activation == Activation::relu ? 0 : 1);
  w.u8(layer.residual ? 1 : 0);
  w.mat(layer.W);
  w.vec(layer.b);
  w.vec(layer.u);
}

DenseLayer read_layer(Reader& r) {
  DenseLayer layer;
  const auto rows = static_cast<Eigen::Index>(r.u32());
  const auto cols = static_cast<Eigen::Index>(r.u32());
  if (rows < 1 || cols < 1 || rows > (1 << 24) || cols > (1 << 24)) {
    throw std::runtime_error("load_checkpoint: implausible layer shape");
  }
  layer.activation = r.u8() == 0 ? Activation::relu : Activation::identity;
  layer.residual = r.u8() != 0;
  layer.W = r.mat(rows, cols);
  layer.b = r.vec(rows);
  layer.u = r.vec(rows);
  return layer;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w(path);
  w.bytes(kMagic, 8);
  w.u32(kVersion);
  switch (ckpt.net.parameterization) {
    case Parameterization::exp: w.u8(0); break;
    case Parameterization::relu_plus_one: w.u8(1); break;
    case Parameterization::softplus_plus_one: w.u8(2); break;
  }
  w.u8(ckpt.net.spectral_norm_enabled ? 1 : 0);
  w.u8(ckpt.gda.has_value() ? 1 : 0);
  w.u8(ckpt.train_config.optimizer == Optimizer::sgd ? 0 : 1);
  w.f64(ckpt.train_config.learning_rate);
  w.f64(ckpt.train_config.lambda);
  w.i32(ckpt.train_config.batch_size);
  w.i32(ckpt.train_config.max_epochs);
  w.i32(ckpt.train_config.patience);
  w.f64(ckpt.train_config.lr_decay);
  w.u64(ckpt.train_config.seed);

  w.u32(static_cast<std::uint32_t>(ckpt.net.feature_layers.size()));
  for (const auto& layer : ckpt.net.feature_layers) write_layer(w, layer);
  write_layer(w, ckpt.net.head);

  if (ckpt.gda.has_value()) {
    const GdaModel& gda = *ckpt.gda;
    w.u32(static_cast<std::uint32_t>(gda.num_classes()));
    w.u32(static_cast<std::uint32_t>(gda.feature_dim()));
    w.vec(gda.weights());
    for (int c = 0; c < gda.num_classes(); ++c) {
      w.vec(gda.means()[c]);
      w.mat(gda.cov_factors()[c]);
    }
    w.f64(gda.d_min());
    w.f64(gda.d_max());
  }
  if (!w.good()) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("load_checkpoint: " + path + " is not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version));
  }

  Checkpoint ckpt;
  switch (r.u8()) {
    case 0: ckpt.net.parameterization = Parameterization::exp; break;
    case 1: ckpt.net.parameterization = Parameterization::relu_plus_one; break;
    case 2: ckpt.net.parameterization = Parameterization::softplus_plus_one; break;
    default: throw std::runtime_error("load_checkpoint: unknown parameterization tag");
  }
  ckpt.net.spectral_norm_enabled = r.u8() != 0;
  const bool has_gda = r.u8() != 0;
  ckpt.train_config.optimizer = r.u8() == 0 ? Optimizer::sgd : Optimizer::adam;
  ckpt.train_config.learning_rate = r.f64();
  ckpt.train_config.lambda = r.f64();
  ckpt.train_config.batch_size = r.i32();
  ckpt.train_config.max_epochs = r.i32();
  ckpt.train_config.patience = r.i32();
  ckpt.train_config.lr_decay = r.f64();
  ckpt.train_config.seed = r.u64();

  const std::uint32_t num_layers = r.u32();
  if (num_layers > 1024) throw std::runtime_error("load_checkpoint: implausible layer count");
  for (std::uint32_t l = 0; l < num_layers; ++l) {
    ckpt.net.feature_layers.push_back(read_layer(r));
  }
  ckpt.net.head = read_layer(r);

  if (has_gda) {
    const auto num_classes = static_cast<Eigen::Index>(r.u32());
    const auto h = static_cast<Eigen::Index>(r.u32());
    Eigen::VectorXd weights = r.vec(num_classes);
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> factors;
    for (Eigen::Index c = 0; c < num_classes; ++c) {
      means.push_back(r.vec(h));
      factors.push_back(r.mat(h, h));
    }
    const double d_min = r.f64();
    const double d_max = r.f64();
    ckpt.gda = GdaModel::from_parts(std::move(weights), std::move(means), std::move(factors),
                                    d_min, d_max);
  }
  return ckpt;
}

}  // namespace daedl
