#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imputeinr/autodiff.hpp"
#include "imputeinr/clustering.hpp"
#include "imputeinr/encoder.hpp"
#include "imputeinr/hypernet.hpp"
#include "imputeinr/inr.hpp"
#include "imputeinr/timeseries.hpp"

namespace imputeinr {

/// The three ablation switches.
struct AblationFlags {
  bool multi_scale = true;
  bool clustering = true;
  bool grouping = true;

  bool operator==(const AblationFlags&) const = default;
};

struct ModelConfig {
  EncoderConfig encoder;
  HyperNetConfig hypernet;
  InrConfig inr;
  AblationFlags flags;
  double cluster_epsilon = 0.5;
};

/// Initial scale of the token → parameter projections relative to fan-in uniform.
inline constexpr double kProjectionInitScale = 0.1;
inline constexpr double kInrTokenInitStd = 0.02;

/// Ordered, named learnable tensors. Registration order is the checkpoint order.
class ParameterStore {
 public:
  std::size_t add(std::string name, Matrix value);
  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Matrix& value(std::size_t i) { return values_[i]; }
  const Matrix& value(std::size_t i) const { return values_[i]; }
  std::vector<Matrix>& values() { return values_; }
  const std::vector<Matrix>& values() const { return values_; }
  std::size_t total_len() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

/// Applies the clustering/grouping switches to a clustering result: without clustering the
/// variables keep their original order and are cut into contiguous groups of the same sizes;
/// without grouping there is a single group.
ClusterPartition effective_partition(const ClusterPartition& clusters, const AblationFlags& flags);

/// Hypernetwork imputer: standardized window → INR parameters → values on the time grid.
class ImputeInrModel {
 public:
  ImputeInrModel(ModelConfig cfg, std::size_t n_vars, ClusterPartition partition, std::uint64_t seed);

  struct ForwardPass {
    std::vector<ad::Var> params;      // aligned with the parameter store
    std::vector<ad::Var> inr_blocks;  // aligned with inr_layout()
    ad::Var prediction;               // N×T, reordered variable order
  };

  /// Records a forward pass on `tape`. The window must be standardized and in original order.
  ForwardPass forward(ad::Tape& tape, const TimeSeriesWindow& window, bool track_gradients,
                      AttentionTrace* trace = nullptr) const;

  InrParams predict_inr_params(const TimeSeriesWindow& window) const;
  /// Standardized predictions on the window's time grid, original variable order.
  Matrix predict(const TimeSeriesWindow& window) const;

  /// Masked MSE against `target` at `miss` = 1 (both original order). Fills `grads` (aligned
  /// with the parameter store) when non-null.
  double loss_and_gradients(const TimeSeriesWindow& input, const Matrix& target, const Matrix& miss,
                            std::vector<Matrix>* grads) const;

  const ModelConfig& config() const { return cfg_; }
  std::size_t n_vars() const { return n_vars_; }
  const ClusterPartition& partition() const { return partition_; }
  const std::vector<InrBlock>& inr_layout() const { return layout_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

 private:
  void init_parameters(std::uint64_t seed);

  ModelConfig cfg_;
  std::size_t n_vars_;
  ClusterPartition partition_;
  std::vector<InrBlock> layout_;
  ParameterStore params_;

  // Indices into params_.
  std::vector<std::pair<std::size_t, std::size_t>> conv_idx_;
  std::size_t embed_w_ = 0, embed_b_ = 0;
  std::vector<std::size_t> block_first_;  // 16 consecutive entries per block
  std::size_t inr_tokens_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> proj_idx_;
};

}  // namespace imputeinr
