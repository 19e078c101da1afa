#include "imputeinr/encoder.hpp"

#include <string>

#include "imputeinr/errors.hpp"
#include "imputeinr/kernels.hpp"

namespace imputeinr {

void EncoderConfig::validate(std::size_t t) const {
  for (std::size_t k : kernel_sizes)
    if (k == 0 || k % 2 == 0)
      throw ConfigError("kernel sizes must be odd and positive, got " + std::to_string(k));
  if (channels_per_scale == 0 || d_model == 0) throw ConfigError("encoder widths must be positive");
  if (patch_len == 0 || t % patch_len != 0)
    throw PatchError("patch length " + std::to_string(patch_len) + " does not divide T=" +
                     std::to_string(t));
}

Matrix encoder_input(const Matrix& values, const Matrix& mask) {
  require_same_shape(values, mask, "encoder_input");
  Matrix x(2 * values.rows, values.cols);
  std::copy(values.data.begin(), values.data.end(), x.data.begin());
  std::copy(mask.data.begin(), mask.data.end(), x.data.begin() + values.size());
  return x;
}

ad::Var multiscale_conv(ad::Var x, const EncoderConfig& cfg,
                        std::span<const std::pair<ad::Var, ad::Var>> weights) {
  if (weights.size() != cfg.kernel_sizes.size())
    throw ShapeError("multiscale_conv: expected " + std::to_string(cfg.kernel_sizes.size()) +
                     " scales, got " + std::to_string(weights.size()));
  std::vector<ad::Var> scales;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const std::size_t k = cfg.kernel_sizes[l];
    const auto& [w, b] = weights[l];
    if (w.rows() != cfg.channels_per_scale || w.cols() != x.rows() * k || b.rows() != w.rows() ||
        b.cols() != 1)
      throw ShapeError("multiscale_conv: scale " + std::to_string(l) + " weight shape mismatch");
    scales.push_back(ad::conv1d(x, w, b, k, EncoderConfig::padding(k)));
  }
  return ad::concat_rows(scales);
}

ad::Var patchify_embed(ad::Var features, const EncoderConfig& cfg, ad::Var embed_weight,
                       ad::Var embed_bias) {
  ad::Var patches = ad::patchify(features, cfg.patch_len);
  if (embed_weight.cols() != patches.cols() || embed_weight.rows() != cfg.d_model)
    throw ShapeError("patchify_embed: embedding weight must be " + std::to_string(cfg.d_model) +
                     "x" + std::to_string(patches.cols()));
  return ad::add_row_bias(ad::matmul_nt(patches, embed_weight), embed_bias);
}

Matrix multiscale_conv(const Matrix& x, const EncoderConfig& cfg,
                       std::span<const ConvScaleWeights> weights) {
  ad::Tape tape;
  std::vector<std::pair<ad::Var, ad::Var>> vars;
  for (const auto& w : weights) vars.emplace_back(tape.constant(w.weight), tape.constant(w.bias));
  return multiscale_conv(tape.constant(x), cfg, vars).value();
}

TokenSequence patchify_embed(const Matrix& features, const EncoderConfig& cfg,
                             const Matrix& embed_weight, const Matrix& embed_bias) {
  ad::Tape tape;
  return {patchify_embed(tape.constant(features), cfg, tape.constant(embed_weight),
                         tape.constant(embed_bias))
              .value()};
}

}  // namespace imputeinr
