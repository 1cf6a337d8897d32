#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "daedl/checkpoint.hpp"
#include "daedl/data.hpp"
#include "daedl/network.hpp"

namespace daedl {

/// Bad configuration, unknown keys, unreadable inputs. CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite losses, failed factorizations. CLI exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key-value run configuration. Unknown keys are rejected; required
/// keys depend on the dataset kind. See README for the key reference.
struct RunConfig {
  // dataset
  std::string dataset;  // two_moons | csv | idx
  int dataset_n = 1000;
  double dataset_noise = 0.1;
  std::string dataset_path;                    // csv
  std::string dataset_images, dataset_labels;  // idx
  std::string test_path;                       // csv test set
  std::string test_images, test_labels;        // idx test set
  int test_n = 0;                              // generated test set size (two_moons)
  double val_ratio = 0.2;

  // architecture
  std::vector<Eigen::Index> hidden;
  bool residual = true;  // square hidden layers become skip blocks

  // training (TrainConfig::seed is derived from `seed` below)
  TrainConfig train;

  // ablation toggles
  bool use_exp = true;
  bool use_de = true;
  bool use_sn = true;

  // OOD set for ablate
  std::string ood;  // "" | uniform | csv
  int ood_n = 1000;
  std::vector<std::pair<double, double>> ood_bounds;
  std::string ood_path;

  std::string combos;  // ablate rows, e.g. "edl,exp,exp+de,exp+sn,exp+de+sn"

  std::uint64_t seed = 0;

  /// Canonical key=value view, used for config echoes.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Parses a flat JSON config file, applies --set overrides and an optional
/// --seed override. Throws ConfigError naming the offending key.
RunConfig parse_run_config(const std::string& config_path,
                           const std::vector<std::pair<std::string, std::string>>& overrides,
                           std::optional<std::uint64_t> seed_override);

/// Deterministic sub-stream seed for the run phases (dataset, split, init,
/// shuffle, test set, ood set).
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream);

struct PipelineResult {
  Checkpoint checkpoint;  // trained network + fitted density model
  std::vector<EpochStats> history;
  LabeledDataset train_split;
  LabeledDataset val_split;
  std::optional<LabeledDataset> test_set;
};

/// Dataset build, stratified split, training, density fit. In-process variant
/// of the train command.
PipelineResult train_pipeline(const RunConfig& cfg);

struct TrainOutputs {
  std::string checkpoint_path;
  std::string history_path;
  int epochs_run = 0;
};

TrainOutputs run_train(const RunConfig& cfg, const std::string& out_dir);

struct EvalReport {
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::string score_dump_path;
};

/// OOD-detection evaluation: AUROC/AUPR per uncertainty measure with label 1
/// assigned to ID samples. Writes report.txt, report.json, scores.csv.
EvalReport run_eval(const std::string& checkpoint_path, const std::string& id_path,
                    const std::string& ood_path, const std::vector<std::string>& measures,
                    const std::string& out_dir);

struct GridSpec {
  double x_min = -2.5, x_max = 3.5;
  double y_min = -2.0, y_max = 2.5;
  int resolution = 50;
};

/// Uncertainty landscape over a 2-D grid; returns the CSV path. Rows are
/// emitted row-major (y outer, x inner) with columns
/// x,y,entropy,aleatoric,epistemic,s.
std::string run_landscape(const std::string& checkpoint_path, const GridSpec& grid,
                          const std::string& out_dir);

struct AblationRow {
  std::string combo;
  bool use_exp = false, use_de = false, use_sn = false;
  double accuracy = 0.0;
  double brier = 0.0;
  double miscls_aupr = 0.0;  // NaN when the split has a single class
  double ood_aleatoric_aupr = 0.0;
  double ood_epistemic_aupr = 0.0;
};

/// Trains and evaluates every requested toggle combination with a shared
/// seed; writes ablation.csv plus per-combo artifacts. DAEDL_THREADS (>= 1)
/// caps how many combos run in parallel.
std::vector<AblationRow> run_ablate(const RunConfig& cfg, const std::string& out_dir);

}  // namespace daedl
