#pragma once

#include <optional>
#include <string>

#include "daedl/density.hpp"
#include "daedl/network.hpp"

namespace daedl {

/// Trained model container: network weights, the training configuration that
/// produced them, and (optionally) the fitted feature-density model with its
/// training log-density range. Byte layout is documented in
/// docs/checkpoint_format.md; save/load round-trips are lossless.
struct Checkpoint {
  EvidentialNetwork net;
  TrainConfig train_config;
  std::optional<GdaModel> gda;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace daedl
