#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "imputeinr/evaluation.hpp"
#include "imputeinr/model.hpp"
#include "imputeinr/training.hpp"

namespace imputeinr {

/// Everything a CLI run needs. Layers: defaults, then a key=value file, then flags.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::size_t window = 96;
  std::size_t stride = 96;
  std::vector<double> mask_rates{0.1, 0.3, 0.5, 0.7, 0.9};  // evaluation rates
  MetricsScale metrics_scale = MetricsScale::Raw;
  std::filesystem::path data;
  std::filesystem::path checkpoint;
  std::filesystem::path output;

  /// Throws ConfigError on inconsistent values or when `data` is set but missing.
  void validate() const;
};

/// Recognised keys, in the order config_entries() lists them.
const std::vector<std::string>& config_keys();

/// Sets one key from its text form. Throws ConfigError for an unknown key or bad value.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Applies a key=value file on top of `cfg`. Blank lines and lines starting with '#' are
/// skipped; later assignments win.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Every key with its current value, in config_keys() order. Re-applying these to a default
/// RunConfig reproduces `cfg`.
/// Defaults, then `file` (when non-empty), then `overrides` in order.
RunConfig layered_config(const std::filesystem::path& file,
                         const std::vector<std::pair<std::string, std::string>>& overrides);

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);

nlohmann::ordered_json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);

}  // namespace imputeinr
