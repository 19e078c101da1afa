#include "imputeinr/model.hpp"

#include <cmath>
#include <numeric>

#include "imputeinr/errors.hpp"
#include "imputeinr/rng.hpp"

namespace imputeinr {

std::size_t ParameterStore::add(std::string name, Matrix value) {
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::size_t ParameterStore::total_len() const {
  std::size_t n = 0;
  for (const Matrix& m : values_) n += m.size();
  return n;
}

ClusterPartition effective_partition(const ClusterPartition& clusters, const AblationFlags& flags) {
  const std::size_t n = clusters.n_vars();
  if (!flags.grouping) {
    ClusterPartition single = contiguous_partition({n});
    if (flags.clustering) single.pi = clusters.pi;
    return single;
  }
  if (flags.clustering) return clusters;
  return contiguous_partition(clusters.group_sizes());
}

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-bound, bound);
  return m;
}

constexpr std::size_t kBlockTensors = 16;

}  // namespace

ImputeInrModel::ImputeInrModel(ModelConfig cfg, std::size_t n_vars, ClusterPartition partition,
                               std::uint64_t seed)
    : cfg_(std::move(cfg)), n_vars_(n_vars), partition_(std::move(partition)) {
  if (n_vars_ == 0) throw ShapeError("model needs at least one variable");
  if (partition_.n_vars() != n_vars_) throw ShapeError("partition size differs from N");
  partition_.validate();
  if (cfg_.encoder.d_model % cfg_.hypernet.n_heads != 0)
    throw ConfigError("d_model must be divisible by n_heads");
  layout_ = imputeinr::inr_layout(n_vars_, partition_.group_sizes(), cfg_.inr);
  init_parameters(seed);
}

void ImputeInrModel::init_parameters(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d = cfg_.encoder.d_model;
  const std::size_t c_in = 2 * n_vars_;
  std::size_t feature_channels = c_in;
  if (cfg_.flags.multi_scale) {
    for (std::size_t l = 0; l < cfg_.encoder.kernel_sizes.size(); ++l) {
      const std::size_t k = cfg_.encoder.kernel_sizes[l];
      const double bound = 1.0 / std::sqrt(static_cast<double>(c_in * k));
      const std::string p = "conv" + std::to_string(l);
      const std::size_t w =
          params_.add(p + ".W", uniform_matrix(cfg_.encoder.channels_per_scale, c_in * k, bound, rng));
      const std::size_t b =
          params_.add(p + ".b", uniform_matrix(cfg_.encoder.channels_per_scale, 1, bound, rng));
      conv_idx_.emplace_back(w, b);
    }
    feature_channels = cfg_.encoder.feature_channels();
  }
  const std::size_t patch_in = feature_channels * cfg_.encoder.patch_len;
  embed_w_ = params_.add("embed.W", uniform_matrix(d, patch_in, 1.0 / std::sqrt(double(patch_in)), rng));
  embed_b_ = params_.add("embed.b", Matrix(1, d));

  const std::size_t ff = d * cfg_.hypernet.ff_mult;
  const double bd = 1.0 / std::sqrt(static_cast<double>(d));
  const double bff = 1.0 / std::sqrt(static_cast<double>(ff));
  for (std::size_t i = 0; i < cfg_.hypernet.n_blocks; ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    block_first_.push_back(params_.add(p + "ln1.gamma", Matrix(1, d, 1.0)));
    params_.add(p + "ln1.beta", Matrix(1, d));
    for (const char* name : {"q", "k", "v", "o"}) {
      params_.add(p + "W" + name, uniform_matrix(d, d, bd, rng));
      params_.add(p + "b" + name, Matrix(1, d));
    }
    params_.add(p + "ln2.gamma", Matrix(1, d, 1.0));
    params_.add(p + "ln2.beta", Matrix(1, d));
    params_.add(p + "W1", uniform_matrix(ff, d, bd, rng));
    params_.add(p + "b1", Matrix(1, ff));
    params_.add(p + "W2", uniform_matrix(d, ff, bff, rng));
    params_.add(p + "b2", Matrix(1, d));
  }

  Matrix tokens(layout_.size(), d);
  for (double& v : tokens.data) v = rng.normal(0.0, kInrTokenInitStd);
  inr_tokens_ = params_.add("inr_tokens", std::move(tokens));

  for (std::size_t j = 0; j < layout_.size(); ++j) {
    const InrBlock& block = layout_[j];
    const std::string p = "proj." + block.name;
    const std::size_t w = params_.add(p + ".W", uniform_matrix(block.size(), d, kProjectionInitScale * bd, rng));
    Matrix base = init_inr_block(block, cfg_.inr, rng);
    const std::size_t b = params_.add(p + ".b", Matrix(1, block.size(), std::move(base.data)));
    proj_idx_.emplace_back(w, b);
  }
}

ImputeInrModel::ForwardPass ImputeInrModel::forward(ad::Tape& tape, const TimeSeriesWindow& window,
                                                    bool track_gradients,
                                                    AttentionTrace* trace) const {
  if (window.n_vars() != n_vars_)
    throw ShapeError("window has " + std::to_string(window.n_vars()) + " variables, model expects " +
                     std::to_string(n_vars_));
  cfg_.encoder.validate(window.length());
  ForwardPass pass;
  pass.params.reserve(params_.size());
  for (const Matrix& m : params_.values())
    pass.params.push_back(track_gradients ? tape.variable(m) : tape.constant(m));

  const Matrix x = encoder_input(reorder_rows(window.values, partition_),
                                 reorder_rows(window.mask, partition_));
  ad::Var features = tape.constant(x);
  if (cfg_.flags.multi_scale) {
    std::vector<std::pair<ad::Var, ad::Var>> conv;
    for (const auto& [w, b] : conv_idx_) conv.emplace_back(pass.params[w], pass.params[b]);
    features = multiscale_conv(features, cfg_.encoder, conv);
  }
  ad::Var tokens = patchify_embed(features, cfg_.encoder, pass.params[embed_w_], pass.params[embed_b_]);

  std::vector<EncoderBlockVars> blocks;
  for (std::size_t first : block_first_) {
    const ad::Var* p = pass.params.data() + first;
    blocks.push_back(EncoderBlockVars{p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9],
                                      p[10], p[11], p[12], p[13], p[14], p[15]});
  }
  static_assert(sizeof(EncoderBlockVars) == kBlockTensors * sizeof(ad::Var));
  ad::Var inr_tokens =
      transformer_forward(tokens, pass.params[inr_tokens_], blocks, cfg_.hypernet, trace);

  for (std::size_t j = 0; j < layout_.size(); ++j) {
    const auto& [w, b] = proj_idx_[j];
    ad::Var flat = ad::add_row_bias(ad::matmul_nt(ad::slice_rows(inr_tokens, j, 1), pass.params[w]),
                                    pass.params[b]);
    pass.inr_blocks.push_back(ad::reshape(flat, layout_[j].rows, layout_[j].cols));
  }
  pass.prediction = inr_query_graph(tape, pass.inr_blocks, layout_, window.t_grid, cfg_.inr).total;
  for (double v : pass.prediction.value().data)
    if (!std::isfinite(v)) throw NumericsError("non-finite value in INR prediction");
  return pass;
}

InrParams ImputeInrModel::predict_inr_params(const TimeSeriesWindow& window) const {
  ad::Tape tape;
  const ForwardPass pass = forward(tape, window, false);
  std::vector<Matrix> blocks;
  for (const ad::Var& v : pass.inr_blocks) blocks.push_back(v.value());
  return unflatten_inr(blocks, layout_, partition_.group_sizes(), cfg_.inr);
}

Matrix ImputeInrModel::predict(const TimeSeriesWindow& window) const {
  ad::Tape tape;
  const ForwardPass pass = forward(tape, window, false);
  return inverse_reorder(pass.prediction.value(), partition_);
}

double ImputeInrModel::loss_and_gradients(const TimeSeriesWindow& input, const Matrix& target,
                                          const Matrix& miss, std::vector<Matrix>* grads) const {
  ad::Tape tape;
  const ForwardPass pass = forward(tape, input, grads != nullptr);
  ad::Var loss = ad::masked_mse(pass.prediction, reorder_rows(target, partition_),
                                reorder_rows(miss, partition_));
  const double value = loss.value()(0, 0);
  if (!std::isfinite(value)) throw NumericsError("non-finite loss");
  if (grads) {
    tape.backward(loss);
    grads->clear();
    grads->reserve(pass.params.size());
    for (const ad::Var& p : pass.params) grads->push_back(tape.grad(p));
  }
  return value;
}

}  // namespace imputeinr
