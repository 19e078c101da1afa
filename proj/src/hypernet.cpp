#include "imputeinr/hypernet.hpp"

#include <cmath>
#include <string>

#include "imputeinr/errors.hpp"

namespace imputeinr {

Matrix sinusoidal_positions(std::size_t m, std::size_t d) {
  Matrix pe(m, d);
  for (std::size_t pos = 0; pos < m; ++pos)
    for (std::size_t i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      const double angle = static_cast<double>(pos) * rate;
      pe(pos, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

namespace {

ad::Var linear(ad::Var x, ad::Var w, ad::Var b) { return ad::add_row_bias(ad::matmul_nt(x, w), b); }

}  // namespace

ad::Var encoder_block(ad::Var x, const EncoderBlockVars& w, std::size_t n_heads,
                      std::vector<Matrix>* head_probs) {
  const std::size_t d = x.cols();
  if (n_heads == 0 || d % n_heads != 0)
    throw ShapeError("d_model " + std::to_string(d) + " is not divisible by " +
                     std::to_string(n_heads) + " heads");
  const std::size_t dh = d / n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  ad::Var a = ad::layer_norm_rows(x, w.ln1_gamma, w.ln1_beta);
  ad::Var q = linear(a, w.wq, w.bq);
  ad::Var k = linear(a, w.wk, w.bk);
  ad::Var v = linear(a, w.wv, w.bv);
  std::vector<ad::Var> heads;
  for (std::size_t h = 0; h < n_heads; ++h) {
    ad::Var qh = ad::slice_cols(q, h * dh, dh);
    ad::Var kh = ad::slice_cols(k, h * dh, dh);
    ad::Var vh = ad::slice_cols(v, h * dh, dh);
    ad::Var probs = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt));
    if (head_probs) head_probs->push_back(probs.value());
    heads.push_back(ad::matmul(probs, vh));
  }
  x = ad::add(x, linear(ad::concat_cols(heads), w.wo, w.bo));

  ad::Var b = ad::layer_norm_rows(x, w.ln2_gamma, w.ln2_beta);
  ad::Var ff = linear(ad::gelu(linear(b, w.w1, w.b1)), w.w2, w.b2);
  return ad::add(x, ff);
}

ad::Var transformer_forward(ad::Var data_tokens, ad::Var inr_tokens,
                            std::span<const EncoderBlockVars> blocks, const HyperNetConfig& cfg,
                            AttentionTrace* trace) {
  if (data_tokens.cols() != inr_tokens.cols())
    throw ShapeError("transformer_forward: data and INR tokens differ in width");
  ad::Tape& tape = *data_tokens.tape;
  ad::Var positioned =
      ad::add(data_tokens, tape.constant(sinusoidal_positions(data_tokens.rows(), data_tokens.cols())));
  const ad::Var parts[] = {positioned, inr_tokens};
  ad::Var x = ad::concat_rows(parts);
  if (trace) trace->probabilities.clear();
  for (const EncoderBlockVars& block : blocks) {
    std::vector<Matrix>* probs = nullptr;
    if (trace) probs = &trace->probabilities.emplace_back();
    x = encoder_block(x, block, cfg.n_heads, probs);
  }
  return ad::slice_rows(x, data_tokens.rows(), inr_tokens.rows());
}

}  // namespace imputeinr
