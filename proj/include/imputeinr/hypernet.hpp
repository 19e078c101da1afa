#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "imputeinr/autodiff.hpp"
#include "imputeinr/matrix.hpp"

namespace imputeinr {

struct HyperNetConfig {
  std::size_t n_blocks = 6;
  std::size_t n_heads = 4;
  std::size_t ff_mult = 4;
};

/// Weights of one pre-norm encoder block. Linear maps are stored out×in (y = x Wᵀ + b).
struct EncoderBlockVars {
  ad::Var ln1_gamma, ln1_beta;
  ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
  ad::Var ln2_gamma, ln2_beta;
  ad::Var w1, b1, w2, b2;
};

/// Softmax probabilities captured during a forward pass, [block][head], each S×S.
struct AttentionTrace {
  std::vector<std::vector<Matrix>> probabilities;
};

/// Fixed sinusoidal position code, M×d.
Matrix sinusoidal_positions(std::size_t m, std::size_t d);

/// One pre-norm block: x + MHA(LN(x)), then + FF(LN(·)) with a GELU feed-forward.
ad::Var encoder_block(ad::Var x, const EncoderBlockVars& w, std::size_t n_heads,
                      std::vector<Matrix>* head_probs = nullptr);

/// Runs the block stack over [data tokens + positions ; INR tokens] with full bidirectional
/// attention and returns the transformed INR-token rows.
ad::Var transformer_forward(ad::Var data_tokens, ad::Var inr_tokens,
                            std::span<const EncoderBlockVars> blocks, const HyperNetConfig& cfg,
                            AttentionTrace* trace = nullptr);

}  // namespace imputeinr
