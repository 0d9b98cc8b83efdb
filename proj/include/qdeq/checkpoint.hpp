#pragma once

#include <filesystem>
#include <string>

#include "qdeq/training.hpp"

namespace qdeq {

struct Checkpoint {
  TrainConfig config;
  TrainState state;
};

/// JSON document: config echo, model description (encoding, ensemble, gate
/// list), θ, head weight/bias, Adam moments and counters. Reals are written
/// with 17 significant digits, so parsing restores them bit-exactly.
std::string checkpoint_to_text(const TrainConfig& cfg, const TrainState& state);

/// Rebuilds the model from the echoed config and checks it against the stored
/// gate list; FormatError on any mismatch or missing field.
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg,
                     const TrainState& state);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qdeq
