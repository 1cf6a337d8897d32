// daedl: train density-aware evidential classifiers and run the evaluation
// protocol (OOD detection, uncertainty landscapes, ablations) from the shell.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "daedl/harness.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> parse_overrides(
    const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const std::string& item : raw) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw daedl::ConfigError("--set expects key=value, got '" + item + "'");
    }
    overrides.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return overrides;
}

std::vector<std::string> parse_measures(const std::string& text) {
  std::vector<std::string> measures;
  std::string item;
  for (char c : text) {
    if (c == ',') {
      if (!item.empty()) measures.push_back(item);
      item.clear();
    } else {
      item += c;
    }
  }
  if (!item.empty()) measures.push_back(item);
  return measures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"density-aware evidential classification"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", checkpoint_path, id_path, ood_path;
  std::string measures_text = "aleatoric,epistemic";
  std::vector<std::string> set_args;
  std::optional<std::uint64_t> seed;
  daedl::GridSpec grid;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) cmd->add_option("--config", config_path, "config file (flat JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "override the run seed");
    if (needs_config) cmd->add_option("--set", set_args, "override a config key (key=value)");
  };

  CLI::App* cmd_train = app.add_subcommand("train", "train a model and fit the feature density");
  add_common(cmd_train, true);

  CLI::App* cmd_eval = app.add_subcommand("eval", "OOD detection metrics for ID vs OOD data");
  cmd_eval->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
  cmd_eval->add_option("--id", id_path, "ID dataset (CSV)")->required();
  cmd_eval->add_option("--ood", ood_path, "OOD dataset (CSV)")->required();
  cmd_eval->add_option("--measures", measures_text, "subset of aleatoric,epistemic");
  cmd_eval->add_option("--out", out_dir, "output directory");

  CLI::App* cmd_landscape = app.add_subcommand("landscape", "uncertainty grid for a 2-D model");
  cmd_landscape->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
  cmd_landscape->add_option("--out", out_dir, "output directory");
  cmd_landscape->add_option("--xmin", grid.x_min, "grid x minimum");
  cmd_landscape->add_option("--xmax", grid.x_max, "grid x maximum");
  cmd_landscape->add_option("--ymin", grid.y_min, "grid y minimum");
  cmd_landscape->add_option("--ymax", grid.y_max, "grid y maximum");
  cmd_landscape->add_option("--resolution", grid.resolution, "cells per axis");

  CLI::App* cmd_ablate = app.add_subcommand("ablate", "train/eval the toggle combinations");
  add_common(cmd_ablate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (cmd_train->parsed()) {
      const daedl::RunConfig cfg =
          daedl::parse_run_config(config_path, parse_overrides(set_args), seed);
      const daedl::TrainOutputs outputs = daedl::run_train(cfg, out_dir);
      std::cout << "checkpoint: " << outputs.checkpoint_path << "\n"
                << "history: " << outputs.history_path << "\n"
                << "epochs_run: " << outputs.epochs_run << "\n";
    } else if (cmd_eval->parsed()) {
      const daedl::EvalReport report = daedl::run_eval(checkpoint_path, id_path, ood_path,
                                                       parse_measures(measures_text), out_dir);
      for (const auto& [key, value] : report.metrics) {
        std::printf("%s = %.17g\n", key.c_str(), value);
      }
      std::cout << "score_dump: " << report.score_dump_path << "\n";
    } else if (cmd_landscape->parsed()) {
      const std::string path = daedl::run_landscape(checkpoint_path, grid, out_dir);
      std::cout << "landscape: " << path << "\n";
    } else if (cmd_ablate->parsed()) {
      const daedl::RunConfig cfg =
          daedl::parse_run_config(config_path, parse_overrides(set_args), seed);
      const auto rows = daedl::run_ablate(cfg, out_dir);
      for (const auto& row : rows) {
        std::printf("%-12s acc=%.4f brier=%.2f ood_alea_aupr=%.4f ood_epis_aupr=%.4f\n",
                    row.combo.c_str(), row.accuracy, row.brier, row.ood_aleatoric_aupr,
                    row.ood_epistemic_aupr);
      }
    }
  } catch (const daedl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const daedl::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
