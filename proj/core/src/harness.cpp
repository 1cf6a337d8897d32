#include "daedl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "daedl/metrics.hpp"
#include "daedl/predict.hpp"

namespace daedl {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over seed + golden-ratio stream offset
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr std::uint64_t kStreamDataset = 0;
constexpr std::uint64_t kStreamSplit = 1;
constexpr std::uint64_t kStreamInit = 2;
constexpr std::uint64_t kStreamShuffle = 3;
constexpr std::uint64_t kStreamTest = 4;
constexpr std::uint64_t kStreamOod = 5;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::set<std::string> kKnownKeys = {
    "dataset",       "dataset_n",     "dataset_noise", "dataset_path",  "dataset_images",
    "dataset_labels", "test_path",    "test_images",   "test_labels",   "test_n",
    "val_ratio",     "hidden",        "residual",      "learning_rate", "lambda",        "batch_size",
    "max_epochs",    "patience",      "lr_decay",      "optimizer",     "seed",
    "exp",           "de",            "sn",            "ood",           "ood_n",
    "ood_bounds",    "ood_path",      "combos"};

double want_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

int want_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return v.get<int>();
}

bool want_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
  return v.get<bool>();
}

std::string want_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, sep)) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::vector<Eigen::Index> parse_hidden(const std::string& text) {
  std::vector<Eigen::Index> dims;
  for (const std::string& part : split_list(text, ',')) {
    const long v = std::strtol(part.c_str(), nullptr, 10);
    if (v < 1) throw ConfigError("config key 'hidden' must list positive layer widths");
    dims.push_back(static_cast<Eigen::Index>(v));
  }
  if (dims.empty()) throw ConfigError("config key 'hidden' must list at least one layer width");
  return dims;
}

std::vector<std::pair<double, double>> parse_bounds(const std::string& text) {
  std::vector<std::pair<double, double>> bounds;
  for (const std::string& part : split_list(text, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("config key 'ood_bounds' must look like 'lo:hi,lo:hi'");
    }
    const double lo = std::strtod(part.substr(0, colon).c_str(), nullptr);
    const double hi = std::strtod(part.substr(colon + 1).c_str(), nullptr);
    if (!(lo < hi)) throw ConfigError("config key 'ood_bounds' needs lo < hi per dimension");
    bounds.emplace_back(lo, hi);
  }
  if (bounds.empty()) throw ConfigError("config key 'ood_bounds' is empty");
  return bounds;
}

void require_key(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing required key '" + key + "'");
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("dataset", dataset);
  if (dataset == "two_moons") {
    kv.emplace_back("dataset_n", std::to_string(dataset_n));
    kv.emplace_back("dataset_noise", fmt(dataset_noise));
    kv.emplace_back("test_n", std::to_string(test_n));
  } else if (dataset == "csv") {
    kv.emplace_back("dataset_path", dataset_path);
    if (!test_path.empty()) kv.emplace_back("test_path", test_path);
  } else if (dataset == "idx") {
    kv.emplace_back("dataset_images", dataset_images);
    kv.emplace_back("dataset_labels", dataset_labels);
    if (!test_images.empty()) kv.emplace_back("test_images", test_images);
    if (!test_labels.empty()) kv.emplace_back("test_labels", test_labels);
  }
  kv.emplace_back("val_ratio", fmt(val_ratio));
  std::string hidden_text;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    hidden_text += (i ? "," : "") + std::to_string(hidden[i]);
  }
  kv.emplace_back("hidden", hidden_text);
  kv.emplace_back("residual", residual ? "true" : "false");
  kv.emplace_back("learning_rate", fmt(train.learning_rate));
  kv.emplace_back("lambda", fmt(train.lambda));
  kv.emplace_back("batch_size", std::to_string(train.batch_size));
  kv.emplace_back("max_epochs", std::to_string(train.max_epochs));
  kv.emplace_back("patience", std::to_string(train.patience));
  kv.emplace_back("lr_decay", fmt(train.lr_decay));
  kv.emplace_back("optimizer", train.optimizer == Optimizer::adam ? "adam" : "sgd");
  kv.emplace_back("exp", use_exp ? "true" : "false");
  kv.emplace_back("de", use_de ? "true" : "false");
  kv.emplace_back("sn", use_sn ? "true" : "false");
  if (!ood.empty()) {
    kv.emplace_back("ood", ood);
    if (ood == "uniform") {
      kv.emplace_back("ood_n", std::to_string(ood_n));
      std::string btext;
      for (std::size_t i = 0; i < ood_bounds.size(); ++i) {
        btext += (i ? "," : "") + fmt(ood_bounds[i].first) + ":" + fmt(ood_bounds[i].second);
      }
      kv.emplace_back("ood_bounds", btext);
    } else if (ood == "csv") {
      kv.emplace_back("ood_path", ood_path);
    }
  }
  if (!combos.empty()) kv.emplace_back("combos", combos);
  kv.emplace_back("seed", std::to_string(seed));
  return kv;
}

RunConfig parse_run_config(const std::string& config_path,
                           const std::vector<std::pair<std::string, std::string>>& overrides,
                           std::optional<std::uint64_t> seed_override) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file: " + config_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in " + config_path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
  for (const auto& [key, value] : j.items()) {
    if (value.is_object() || value.is_array()) {
      throw ConfigError("config must be flat; key '" + key + "' is nested");
    }
  }

  for (const auto& [key, value] : overrides) {
    json parsed;
    try {
      parsed = json::parse(value);
      if (parsed.is_object() || parsed.is_array()) parsed = value;
    } catch (const std::exception&) {
      parsed = value;  // plain string
    }
    j[key] = parsed;
  }

  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!kKnownKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  RunConfig cfg;
  require_key(j, "dataset");
  cfg.dataset = want_string(j["dataset"], "dataset");
  if (cfg.dataset == "two_moons") {
    require_key(j, "dataset_n");
    require_key(j, "dataset_noise");
    cfg.dataset_n = want_int(j["dataset_n"], "dataset_n");
    cfg.dataset_noise = want_number(j["dataset_noise"], "dataset_noise");
  } else if (cfg.dataset == "csv") {
    require_key(j, "dataset_path");
    cfg.dataset_path = want_string(j["dataset_path"], "dataset_path");
    if (j.contains("test_path")) cfg.test_path = want_string(j["test_path"], "test_path");
  } else if (cfg.dataset == "idx") {
    require_key(j, "dataset_images");
    require_key(j, "dataset_labels");
    cfg.dataset_images = want_string(j["dataset_images"], "dataset_images");
    cfg.dataset_labels = want_string(j["dataset_labels"], "dataset_labels");
    if (j.contains("test_images")) cfg.test_images = want_string(j["test_images"], "test_images");
    if (j.contains("test_labels")) cfg.test_labels = want_string(j["test_labels"], "test_labels");
  } else {
    throw ConfigError("config key 'dataset' must be two_moons, csv, or idx");
  }
  if (j.contains("test_n")) cfg.test_n = want_int(j["test_n"], "test_n");
  if (j.contains("val_ratio")) cfg.val_ratio = want_number(j["val_ratio"], "val_ratio");
  if (!(cfg.val_ratio > 0.0 && cfg.val_ratio < 1.0)) {
    throw ConfigError("config key 'val_ratio' must lie in (0, 1)");
  }

  require_key(j, "hidden");
  cfg.hidden = parse_hidden(want_string(j["hidden"], "hidden"));
  if (j.contains("residual")) cfg.residual = want_bool(j["residual"], "residual");

  if (j.contains("learning_rate")) cfg.train.learning_rate = want_number(j["learning_rate"], "learning_rate");
  if (j.contains("lambda")) cfg.train.lambda = want_number(j["lambda"], "lambda");
  if (j.contains("batch_size")) cfg.train.batch_size = want_int(j["batch_size"], "batch_size");
  if (j.contains("max_epochs")) cfg.train.max_epochs = want_int(j["max_epochs"], "max_epochs");
  if (j.contains("patience")) cfg.train.patience = want_int(j["patience"], "patience");
  if (j.contains("lr_decay")) cfg.train.lr_decay = want_number(j["lr_decay"], "lr_decay");
  if (j.contains("optimizer")) {
    const std::string opt = want_string(j["optimizer"], "optimizer");
    if (opt == "adam") {
      cfg.train.optimizer = Optimizer::adam;
    } else if (opt == "sgd") {
      cfg.train.optimizer = Optimizer::sgd;
    } else {
      throw ConfigError("config key 'optimizer' must be adam or sgd");
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) throw ConfigError("config key 'seed' must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (seed_override.has_value()) cfg.seed = *seed_override;

  if (j.contains("exp")) cfg.use_exp = want_bool(j["exp"], "exp");
  if (j.contains("de")) cfg.use_de = want_bool(j["de"], "de");
  if (j.contains("sn")) cfg.use_sn = want_bool(j["sn"], "sn");

  if (j.contains("ood")) {
    cfg.ood = want_string(j["ood"], "ood");
    if (cfg.ood == "uniform") {
      require_key(j, "ood_bounds");
      cfg.ood_bounds = parse_bounds(want_string(j["ood_bounds"], "ood_bounds"));
      if (j.contains("ood_n")) cfg.ood_n = want_int(j["ood_n"], "ood_n");
    } else if (cfg.ood == "csv") {
      require_key(j, "ood_path");
      cfg.ood_path = want_string(j["ood_path"], "ood_path");
    } else {
      throw ConfigError("config key 'ood' must be uniform or csv");
    }
  }
  if (j.contains("combos")) cfg.combos = want_string(j["combos"], "combos");
  return cfg;
}

namespace {

LabeledDataset build_dataset(const RunConfig& cfg) {
  try {
    if (cfg.dataset == "two_moons") {
      return two_moons(cfg.dataset_n, cfg.dataset_noise, sub_seed(cfg.seed, kStreamDataset));
    }
    if (cfg.dataset == "csv") return load_csv(cfg.dataset_path);
    return load_idx(cfg.dataset_images, cfg.dataset_labels);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

std::optional<LabeledDataset> build_test_set(const RunConfig& cfg) {
  try {
    if (cfg.dataset == "two_moons" && cfg.test_n > 0) {
      return two_moons(cfg.test_n, cfg.dataset_noise, sub_seed(cfg.seed, kStreamTest));
    }
    if (cfg.dataset == "csv" && !cfg.test_path.empty()) return load_csv(cfg.test_path);
    if (cfg.dataset == "idx" && !cfg.test_images.empty()) {
      return load_idx(cfg.test_images, cfg.test_labels);
    }
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return std::nullopt;
}

LabeledDataset build_ood_set(const RunConfig& cfg, Eigen::Index dim) {
  try {
    if (cfg.ood == "uniform") {
      auto bounds = cfg.ood_bounds;
      if (bounds.size() == 1 && dim > 1) {
        bounds.assign(static_cast<std::size_t>(dim), bounds[0]);  // broadcast
      }
      if (static_cast<Eigen::Index>(bounds.size()) != dim) {
        throw ConfigError("ood_bounds dimension does not match the dataset");
      }
      return uniform_ood(cfg.ood_n, bounds, sub_seed(cfg.seed, kStreamOod));
    }
    if (cfg.ood == "csv") return load_csv(cfg.ood_path);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("missing required key 'ood'");
}

Eigen::MatrixXd feature_matrix(const EvidentialNetwork& net, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd feats(X.rows(), net.feature_dim());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    feats.row(i) = forward(net, X.row(i).transpose()).features.transpose();
  }
  return feats;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "epoch,train_loss,val_loss,learning_rate,max_feature_sigma\n";
  for (const auto& row : history) {
    out << row.epoch << ',' << fmt(row.train_loss) << ',' << fmt(row.val_loss) << ','
        << fmt(row.learning_rate) << ',' << fmt(row.max_feature_sigma) << '\n';
  }
}

void write_config_echo(const RunConfig& cfg, const std::string& path) {
  json j = json::object();
  for (const auto& [key, value] : cfg.echo()) j[key] = value;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

PipelineResult train_pipeline(const RunConfig& cfg) {
  PipelineResult result;
  const LabeledDataset full = build_dataset(cfg);
  SplitResult parts = [&] {
    try {
      return split(full, 1.0 - cfg.val_ratio, sub_seed(cfg.seed, kStreamSplit));
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }();

  Rng init_rng(sub_seed(cfg.seed, kStreamInit));
  const Parameterization param =
      cfg.use_exp ? Parameterization::exp : Parameterization::relu_plus_one;
  EvidentialNetwork net;
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = sub_seed(cfg.seed, kStreamShuffle);
  try {
    net = make_network(full.dim(), cfg.hidden, full.num_classes, param, cfg.use_sn, init_rng,
                       cfg.residual);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  TrainResult trained;
  try {
    trained = train(std::move(net), parts.train, parts.holdout, train_cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::runtime_error& e) {
    throw NumericError(e.what());
  }

  GdaModel gda = [&] {
    try {
      return GdaModel::fit(feature_matrix(trained.net, parts.train.X), parts.train.y,
                           full.num_classes);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    } catch (const std::runtime_error& e) {
      throw NumericError(e.what());
    }
  }();

  result.checkpoint.net = std::move(trained.net);
  result.checkpoint.train_config = train_cfg;
  result.checkpoint.gda = std::move(gda);
  result.history = std::move(trained.history);
  result.train_split = std::move(parts.train);
  result.val_split = std::move(parts.holdout);
  result.test_set = build_test_set(cfg);
  return result;
}

TrainOutputs run_train(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  PipelineResult pipeline = train_pipeline(cfg);

  TrainOutputs outputs;
  outputs.checkpoint_path = (fs::path(out_dir) / "checkpoint.bin").string();
  outputs.history_path = (fs::path(out_dir) / "history.csv").string();
  outputs.epochs_run = static_cast<int>(pipeline.history.size());
  save_checkpoint(pipeline.checkpoint, outputs.checkpoint_path);
  write_history_csv(pipeline.history, outputs.history_path);
  write_config_echo(cfg, (fs::path(out_dir) / "config_echo.json").string());
  return outputs;
}

namespace {

Checkpoint load_checkpoint_checked(const std::string& path) {
  try {
    return load_checkpoint(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

LabeledDataset load_csv_checked(const std::string& path) {
  try {
    return load_csv(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

struct SampleScores {
  double aleatoric;
  double epistemic;
  double s;
  double entropy;
  int predicted;
};

SampleScores score_sample(const EvidentialNetwork& net, const GdaModel* gda, bool use_density,
                          const Eigen::VectorXd& x) {
  const PredictionOutput out =
      use_density && gda != nullptr ? predict(net, *gda, x) : predict_with_scale(net, x, 1.0);
  return SampleScores{out.aleatoric_conf, out.epistemic_conf, out.s, out.entropy,
                      out.predicted_class};
}

void write_report(const EvalReport& report, const std::string& out_dir) {
  std::ofstream txt(fs::path(out_dir) / "report.txt");
  for (const auto& [key, value] : report.metrics) txt << key << " = " << fmt(value) << '\n';
  txt << "score_dump = " << report.score_dump_path << '\n';
  for (const auto& [key, value] : report.config_echo) txt << "config." << key << " = " << value << '\n';

  json j;
  j["metrics"] = json::object();
  for (const auto& [key, value] : report.metrics) j["metrics"][key] = value;
  j["config"] = json::object();
  for (const auto& [key, value] : report.config_echo) j["config"][key] = value;
  j["score_dump"] = report.score_dump_path;
  std::ofstream out(fs::path(out_dir) / "report.json");
  out << j.dump(2) << '\n';
}

}  // namespace

EvalReport run_eval(const std::string& checkpoint_path, const std::string& id_path,
                    const std::string& ood_path, const std::vector<std::string>& measures,
                    const std::string& out_dir) {
  for (const std::string& m : measures) {
    if (m != "aleatoric" && m != "epistemic") {
      throw ConfigError("unknown measure '" + m + "' (want aleatoric and/or epistemic)");
    }
  }
  if (measures.empty()) throw ConfigError("at least one measure is required");

  const Checkpoint ckpt = load_checkpoint_checked(checkpoint_path);
  if (!ckpt.gda.has_value()) throw ConfigError("checkpoint has no density model");
  const LabeledDataset id_set = load_csv_checked(id_path);
  const LabeledDataset ood_set = load_csv_checked(ood_path);
  if (id_set.dim() != ckpt.net.input_dim() || ood_set.dim() != ckpt.net.input_dim()) {
    throw ConfigError("dataset dimension does not match the checkpoint");
  }

  fs::create_directories(out_dir);
  const std::string dump_path = (fs::path(out_dir) / "scores.csv").string();
  std::ofstream dump(dump_path);
  if (!dump) throw ConfigError("cannot write " + dump_path);
  dump << "is_id,aleatoric,epistemic,s,entropy\n";

  std::vector<double> alea, epis;
  std::vector<int> labels;
  auto score_set = [&](const LabeledDataset& ds, int is_id) {
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
      const SampleScores s = score_sample(ckpt.net, &*ckpt.gda, true, ds.X.row(i).transpose());
      alea.push_back(s.aleatoric);
      epis.push_back(s.epistemic);
      labels.push_back(is_id);
      dump << is_id << ',' << fmt(s.aleatoric) << ',' << fmt(s.epistemic) << ',' << fmt(s.s) << ','
           << fmt(s.entropy) << '\n';
    }
  };
  score_set(id_set, 1);
  score_set(ood_set, 0);
  dump.close();

  EvalReport report;
  report.score_dump_path = dump_path;
  for (const std::string& m : measures) {
    const std::vector<double>& scores = m == "aleatoric" ? alea : epis;
    const ScoredBinarySet set{scores, labels};
    report.metrics.emplace_back(m + "_auroc", auroc(set));
    report.metrics.emplace_back(m + "_aupr", aupr(set));
  }
  report.config_echo.emplace_back("checkpoint", checkpoint_path);
  report.config_echo.emplace_back("id_data", id_path);
  report.config_echo.emplace_back("ood_data", ood_path);
  std::string measure_list;
  for (std::size_t i = 0; i < measures.size(); ++i) measure_list += (i ? "," : "") + measures[i];
  report.config_echo.emplace_back("measures", measure_list);

  write_report(report, out_dir);
  return report;
}

std::string run_landscape(const std::string& checkpoint_path, const GridSpec& grid,
                          const std::string& out_dir) {
  if (grid.resolution < 2) throw ConfigError("landscape resolution must be at least 2");
  if (!(grid.x_min < grid.x_max && grid.y_min < grid.y_max)) {
    throw ConfigError("landscape ranges must satisfy min < max");
  }
  const Checkpoint ckpt = load_checkpoint_checked(checkpoint_path);
  if (ckpt.net.input_dim() != 2) throw ConfigError("landscape requires a 2-D model");
  if (!ckpt.gda.has_value()) throw ConfigError("checkpoint has no density model");

  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / "landscape.csv").string();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "x,y,entropy,aleatoric,epistemic,s\n";

  const int res = grid.resolution;
  for (int iy = 0; iy < res; ++iy) {
    const double y = grid.y_min + (grid.y_max - grid.y_min) * iy / (res - 1);
    for (int ix = 0; ix < res; ++ix) {
      const double x = grid.x_min + (grid.x_max - grid.x_min) * ix / (res - 1);
      const PredictionOutput p = predict(ckpt.net, *ckpt.gda, Eigen::Vector2d(x, y));
      out << fmt(x) << ',' << fmt(y) << ',' << fmt(p.entropy) << ',' << fmt(p.aleatoric_conf)
          << ',' << fmt(p.epistemic_conf) << ',' << fmt(p.s) << '\n';
    }
  }
  return path;
}

namespace {

struct ComboSpec {
  std::string name;
  bool use_exp = false, use_de = false, use_sn = false;
};

std::vector<ComboSpec> parse_combos(const std::string& text) {
  const std::string source = text.empty() ? "edl,exp,exp+de,exp+sn,exp+de+sn" : text;
  std::vector<ComboSpec> combos;
  for (const std::string& item : split_list(source, ',')) {
    ComboSpec combo;
    combo.name = item;
    if (item == "edl") {
      combos.push_back(combo);
      continue;
    }
    const auto tokens = split_list(item, '+');
    if (tokens.empty() || tokens[0] != "exp") {
      throw ConfigError("combo '" + item + "' must be 'edl' or start with 'exp'");
    }
    combo.use_exp = true;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      if (tokens[t] == "de") {
        combo.use_de = true;
      } else if (tokens[t] == "sn") {
        combo.use_sn = true;
      } else {
        throw ConfigError("combo '" + item + "' has unknown component '" + tokens[t] + "'");
      }
    }
    combos.push_back(combo);
  }
  if (combos.empty()) throw ConfigError("config key 'combos' lists no combinations");
  return combos;
}

int env_thread_cap() {
  const char* raw = std::getenv("DAEDL_THREADS");
  if (raw == nullptr) return 1;
  const long v = std::strtol(raw, nullptr, 10);
  return v < 1 ? 1 : static_cast<int>(v);
}

AblationRow evaluate_combo(const RunConfig& base, const ComboSpec& combo,
                           const LabeledDataset& test_set, const LabeledDataset& ood_set,
                           const std::string& combo_dir) {
  RunConfig cfg = base;
  cfg.use_exp = combo.use_exp;
  cfg.use_de = combo.use_de;
  cfg.use_sn = combo.use_sn;

  PipelineResult pipeline = train_pipeline(cfg);
  fs::create_directories(combo_dir);
  save_checkpoint(pipeline.checkpoint, (fs::path(combo_dir) / "checkpoint.bin").string());
  write_history_csv(pipeline.history, (fs::path(combo_dir) / "history.csv").string());

  const EvidentialNetwork& net = pipeline.checkpoint.net;
  const GdaModel* gda = &*pipeline.checkpoint.gda;

  const Eigen::Index n_test = test_set.size();
  Eigen::VectorXi preds(n_test);
  Eigen::MatrixXd probs(n_test, net.num_classes());
  std::vector<double> alea_id(n_test), epis_id(n_test);
  for (Eigen::Index i = 0; i < n_test; ++i) {
    const PredictionOutput out = cfg.use_de
                                     ? predict(net, *gda, test_set.X.row(i).transpose())
                                     : predict_with_scale(net, test_set.X.row(i).transpose(), 1.0);
    preds[i] = out.predicted_class;
    probs.row(i) = out.probs.transpose();
    alea_id[i] = out.aleatoric_conf;
    epis_id[i] = out.epistemic_conf;
  }

  AblationRow row;
  row.combo = combo.name;
  row.use_exp = combo.use_exp;
  row.use_de = combo.use_de;
  row.use_sn = combo.use_sn;
  row.accuracy = accuracy(preds, test_set.y);
  row.brier = brier(probs, test_set.y);

  // Misclassification detection: label 1 = correctly classified, confidence
  // is the maximum expected class probability. Undefined when one class is empty.
  {
    std::vector<int> correct(n_test);
    int hits = 0;
    for (Eigen::Index i = 0; i < n_test; ++i) {
      correct[i] = preds[i] == test_set.y[i] ? 1 : 0;
      hits += correct[i];
    }
    if (hits == 0 || hits == n_test) {
      row.miscls_aupr = std::numeric_limits<double>::quiet_NaN();
    } else {
      row.miscls_aupr = aupr(ScoredBinarySet{std::vector<double>(alea_id), correct});
    }
  }

  std::vector<double> alea_all(alea_id), epis_all(epis_id);
  std::vector<int> id_labels(static_cast<std::size_t>(n_test), 1);
  for (Eigen::Index i = 0; i < ood_set.size(); ++i) {
    const PredictionOutput out = cfg.use_de
                                     ? predict(net, *gda, ood_set.X.row(i).transpose())
                                     : predict_with_scale(net, ood_set.X.row(i).transpose(), 1.0);
    alea_all.push_back(out.aleatoric_conf);
    epis_all.push_back(out.epistemic_conf);
    id_labels.push_back(0);
  }
  row.ood_aleatoric_aupr = aupr(ScoredBinarySet{alea_all, id_labels});
  row.ood_epistemic_aupr = aupr(ScoredBinarySet{epis_all, id_labels});
  return row;
}

}  // namespace

std::vector<AblationRow> run_ablate(const RunConfig& cfg, const std::string& out_dir) {
  const std::vector<ComboSpec> combos = parse_combos(cfg.combos);

  fs::create_directories(out_dir);
  const RunConfig& base = cfg;
  std::optional<LabeledDataset> maybe_test = build_test_set(base);
  if (!maybe_test.has_value()) {
    throw ConfigError("ablate requires a test set (set test_n or test_path/test_images)");
  }
  const LabeledDataset test_set = std::move(*maybe_test);
  const LabeledDataset ood_set = build_ood_set(cfg, test_set.dim());
  save_csv(test_set, (fs::path(out_dir) / "id_test.csv").string());
  save_csv(ood_set, (fs::path(out_dir) / "ood.csv").string());

  std::vector<AblationRow> rows(combos.size());
  std::vector<std::string> errors(combos.size());
  std::vector<bool> config_error(combos.size(), false);
  std::atomic<std::size_t> next{0};
  const int threads = std::min<int>(env_thread_cap(), static_cast<int>(combos.size()));

  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= combos.size()) break;
      const std::string combo_dir = (fs::path(out_dir) / combos[k].name).string();
      try {
        rows[k] = evaluate_combo(base, combos[k], test_set, ood_set, combo_dir);
      } catch (const ConfigError& e) {
        errors[k] = e.what();
        config_error[k] = true;
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t k = 0; k < combos.size(); ++k) {
    if (!errors[k].empty()) {
      const std::string msg = "combo '" + combos[k].name + "' failed: " + errors[k];
      if (config_error[k]) throw ConfigError(msg);
      throw NumericError(msg);
    }
  }

  const std::string csv_path = (fs::path(out_dir) / "ablation.csv").string();
  std::ofstream out(csv_path);
  if (!out) throw ConfigError("cannot write " + csv_path);
  out << "combo,exp,de,sn,accuracy,brier,miscls_aupr,ood_aleatoric_aupr,ood_epistemic_aupr\n";
  for (const auto& row : rows) {
    out << row.combo << ',' << (row.use_exp ? 1 : 0) << ',' << (row.use_de ? 1 : 0) << ','
        << (row.use_sn ? 1 : 0) << ',' << fmt(row.accuracy) << ',' << fmt(row.brier) << ','
        << fmt(row.miscls_aupr) << ',' << fmt(row.ood_aleatoric_aupr) << ','
        << fmt(row.ood_epistemic_aupr) << '\n';
  }
  write_config_echo(cfg, (fs::path(out_dir) / "config_echo.json").string());
  return rows;
}

}  // namespace daedl
