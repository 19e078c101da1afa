#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "imputeinr/model.hpp"
#include "imputeinr/training.hpp"

namespace imputeinr {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr char kCheckpointMagic[] = "IINRCKPT";

struct CheckpointMeta {
  std::size_t window = 0;
  std::vector<std::string> variable_names;
  TrainConfig train;
  ClusterPartition clusters;  // raw clustering result before the ablation switches
};

struct LoadedCheckpoint {
  ImputeInrModel model;
  CheckpointMeta meta;
};

/// Layout: 8-byte magic, u64 LE header length, JSON header, then every parameter as f64 LE
/// in registration order.
std::string checkpoint_bytes(const ImputeInrModel& model, const CheckpointMeta& meta);
void save_checkpoint(const std::filesystem::path& path, const ImputeInrModel& model,
                     const CheckpointMeta& meta);
/// Throws SchemaError on a bad magic, version, header or parameter table.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);
LoadedCheckpoint checkpoint_from_bytes(const std::string& bytes);

}  // namespace imputeinr
