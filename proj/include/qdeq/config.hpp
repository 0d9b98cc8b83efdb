#pragma once

#include <filesystem>
#include <string>

#include "qdeq/training.hpp"

namespace qdeq {

/// JSON object whose keys are exactly TrainConfig field names; missing keys
/// keep their defaults, unknown keys and wrong types are InvalidArgument.
TrainConfig parse_config(const std::string& json_text);
TrainConfig load_config(const std::filesystem::path& path);

/// Every field, pretty-printed; parse_config(config_to_json(c)) == c.
std::string config_to_json(const TrainConfig& cfg);

}  // namespace qdeq
