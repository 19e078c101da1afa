#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "imputeinr/autodiff.hpp"
#include "imputeinr/matrix.hpp"

namespace imputeinr {

struct EncoderConfig {
  std::vector<std::size_t> kernel_sizes{3, 5, 7};
  std::size_t channels_per_scale = 16;
  std::size_t patch_len = 8;
  std::size_t d_model = 64;

  /// "Same" padding (k−1)/2 keeps every scale at length T.
  static std::size_t padding(std::size_t kernel) { return (kernel - 1) / 2; }
  std::size_t feature_channels() const { return kernel_sizes.size() * channels_per_scale; }
  /// Throws ConfigError for even kernels or a patch length that does not divide `t`.
  void validate(std::size_t t) const;
};

struct ConvScaleWeights {
  Matrix weight;  // c_l × (C_in·k_l)
  Matrix bias;    // c_l × 1
};

struct TokenSequence {
  Matrix tokens;  // M × d_model, time order
};

/// Stacks the standardized values (N rows) over the observation mask (N rows).
Matrix encoder_input(const Matrix& values, const Matrix& mask);

/// Per-scale stride-1 cross-correlation with same padding, concatenated channel-wise in
/// kernel-size order: (2N)×T → (Σ c_l)×T.
Matrix multiscale_conv(const Matrix& x, const EncoderConfig& cfg,
                       std::span<const ConvScaleWeights> weights);

/// Splits T into T/P segments and maps each flattened C×P block through an affine map.
/// embed_weight is d_model×(C·P), embed_bias is 1×d_model.
TokenSequence patchify_embed(const Matrix& features, const EncoderConfig& cfg,
                             const Matrix& embed_weight, const Matrix& embed_bias);

// Taped forms used by the model; the plain functions above run through these.
ad::Var multiscale_conv(ad::Var x, const EncoderConfig& cfg,
                        std::span<const std::pair<ad::Var, ad::Var>> weights);
ad::Var patchify_embed(ad::Var features, const EncoderConfig& cfg, ad::Var embed_weight,
                       ad::Var embed_bias);

}  // namespace imputeinr
