#include "imputeinr/inr.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "imputeinr/errors.hpp"
#include "imputeinr/rng.hpp"

namespace imputeinr {

namespace {

std::size_t group_input_dim(const InrConfig& cfg) { return cfg.global_layers == 0 ? 1 : cfg.hidden; }

std::size_t group_output_dim(const InrConfig& cfg, std::size_t layer, std::size_t group_size) {
  return layer + 1 == cfg.group_layers ? group_size : cfg.hidden;
}

// Frequency multiplier of the sine activation: ω0 on the layer that sees t directly.
double layer_omega(double omega0, bool first_layer) { return first_layer ? omega0 : 1.0; }

double activate(Activation act, double z, double omega) {
  return act == Activation::Sine ? std::sin(omega * z) : (z > 0.0 ? z : 0.0);
}

}  // namespace

std::vector<InrBlock> inr_layout(std::size_t n_vars, const std::vector<std::size_t>& group_sizes,
                                 const InrConfig& cfg) {
  if (cfg.group_layers == 0) throw ShapeError("at least one group layer is required");
  if (std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0}) != n_vars)
    throw ShapeError("group sizes do not sum to N");
  using K = InrBlock::Kind;
  std::vector<InrBlock> layout;
  layout.push_back({K::Trend, n_vars, cfg.trend_degree + 1, 0, 0, "trend"});
  if (cfg.n_freqs > 0) layout.push_back({K::Seasonal, n_vars, 2 * cfg.n_freqs, 0, 0, "seasonal"});
  for (std::size_t l = 0; l < cfg.global_layers; ++l) {
    const std::size_t in = l == 0 ? 1 : cfg.hidden;
    layout.push_back({K::GlobalWeight, cfg.hidden, in, l, 0, "global" + std::to_string(l) + ".W"});
    layout.push_back({K::GlobalBias, cfg.hidden, 1, l, 0, "global" + std::to_string(l) + ".b"});
  }
  for (std::size_t g = 0; g < group_sizes.size(); ++g)
    for (std::size_t l = 0; l < cfg.group_layers; ++l) {
      const std::size_t in = l == 0 ? group_input_dim(cfg) : cfg.hidden;
      const std::size_t out = group_output_dim(cfg, l, group_sizes[g]);
      const std::string prefix = "group" + std::to_string(g) + "." + std::to_string(l);
      layout.push_back({K::GroupWeight, out, in, l, g, prefix + ".W"});
      layout.push_back({K::GroupBias, out, 1, l, g, prefix + ".b"});
    }
  return layout;
}

std::size_t inr_total_len(std::size_t n_vars, const std::vector<std::size_t>& group_sizes,
                          const InrConfig& cfg) {
  const std::size_t h = cfg.hidden;
  std::size_t total = n_vars * (cfg.trend_degree + 1) + 2 * n_vars * cfg.n_freqs;
  if (cfg.global_layers > 0) total += (h * 1 + h) + (cfg.global_layers - 1) * (h * h + h);
  const std::size_t in0 = group_input_dim(cfg);
  for (std::size_t size : group_sizes) {
    if (cfg.group_layers == 1) {
      total += size * in0 + size;
    } else {
      total += h * in0 + h;                               // first group layer
      total += (cfg.group_layers - 2) * (h * h + h);      // middle layers
      total += size * h + size;                           // output layer
    }
  }
  return total;
}

std::vector<std::size_t> output_group_sizes(const InrParams& p) {
  std::vector<std::size_t> sizes;
  for (const auto& layers : p.group_layers) sizes.push_back(layers.back().weight.rows);
  return sizes;
}

InrParams unflatten_inr(std::span<const Matrix> blocks, const std::vector<InrBlock>& layout,
                        const std::vector<std::size_t>& group_sizes, const InrConfig& cfg) {
  if (blocks.size() != layout.size()) throw ShapeError("unflatten_inr: block count mismatch");
  InrParams p;
  p.omega0 = cfg.omega0;
  p.activation = cfg.activation;
  const std::size_t n = layout.front().rows;
  p.fourier_sin = Matrix(n, cfg.n_freqs);
  p.fourier_cos = Matrix(n, cfg.n_freqs);
  p.global_layers.resize(cfg.global_layers);
  p.group_layers.assign(group_sizes.size(), std::vector<AffineLayer>(cfg.group_layers));
  using K = InrBlock::Kind;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const InrBlock& b = layout[i];
    const Matrix& m = blocks[i];
    if (m.rows != b.rows || m.cols != b.cols) throw ShapeError("unflatten_inr: block " + b.name);
    switch (b.kind) {
      case K::Trend: p.trend = m; break;
      case K::Seasonal:
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t f = 0; f < cfg.n_freqs; ++f) {
            p.fourier_sin(r, f) = m(r, f);
            p.fourier_cos(r, f) = m(r, cfg.n_freqs + f);
          }
        break;
      case K::GlobalWeight: p.global_layers[b.layer].weight = m; break;
      case K::GlobalBias: p.global_layers[b.layer].bias = m; break;
      case K::GroupWeight: p.group_layers[b.group][b.layer].weight = m; break;
      case K::GroupBias: p.group_layers[b.group][b.layer].bias = m; break;
    }
  }
  return p;
}

std::vector<Matrix> flatten_inr(const InrParams& p, const std::vector<InrBlock>& layout) {
  std::vector<Matrix> out;
  using K = InrBlock::Kind;
  for (const InrBlock& b : layout) {
    switch (b.kind) {
      case K::Trend: out.push_back(p.trend); break;
      case K::Seasonal: {
        Matrix m(b.rows, b.cols);
        const std::size_t f_count = p.fourier_sin.cols;
        for (std::size_t r = 0; r < b.rows; ++r)
          for (std::size_t f = 0; f < f_count; ++f) {
            m(r, f) = p.fourier_sin(r, f);
            m(r, f_count + f) = p.fourier_cos(r, f);
          }
        out.push_back(std::move(m));
        break;
      }
      case K::GlobalWeight: out.push_back(p.global_layers[b.layer].weight); break;
      case K::GlobalBias: out.push_back(p.global_layers[b.layer].bias); break;
      case K::GroupWeight: out.push_back(p.group_layers[b.group][b.layer].weight); break;
      case K::GroupBias: out.push_back(p.group_layers[b.group][b.layer].bias); break;
    }
  }
  return out;
}

double trend_eval(std::span<const double> coeffs, double t) {
  double acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * t + coeffs[i];
  return acc;
}

double seasonal_eval(std::span<const double> sin_c, std::span<const double> cos_c, double t) {
  if (sin_c.size() != cos_c.size()) throw ShapeError("seasonal_eval: coefficient banks differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < sin_c.size(); ++i) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(i + 1) * t;
    acc += sin_c[i] * std::sin(phase) + cos_c[i] * std::cos(phase);
  }
  return acc;
}

namespace {

std::vector<double> affine(const AffineLayer& layer, const std::vector<double>& x) {
  if (layer.weight.cols != x.size() || layer.bias.rows != layer.weight.rows)
    throw ShapeError("residual layer dimension mismatch");
  std::vector<double> z(layer.weight.rows);
  for (std::size_t o = 0; o < z.size(); ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += layer.weight(o, i) * x[i];
    z[o] = acc + layer.bias(o, 0);
  }
  return z;
}

}  // namespace

std::vector<double> residual_forward(const InrParams& params, const ClusterPartition& partition,
                                     double t) {
  const auto sizes = partition.group_sizes();
  if (sizes.size() != params.group_layers.size())
    throw ShapeError("residual_forward: partition has " + std::to_string(sizes.size()) +
                     " groups, parameters have " + std::to_string(params.group_layers.size()));
  std::vector<double> h{t};
  bool first = true;
  for (const AffineLayer& layer : params.global_layers) {
    h = affine(layer, h);
    for (double& v : h) v = activate(params.activation, v, layer_omega(params.omega0, first));
    first = false;
  }
  std::vector<double> out;
  out.reserve(partition.n_vars());
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const auto& layers = params.group_layers[g];
    if (layers.back().weight.rows != sizes[g])
      throw ShapeError("residual_forward: group output width differs from cluster size");
    std::vector<double> x = h;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      x = affine(layers[l], x);
      if (l + 1 < layers.size())
        for (double& v : x) v = activate(params.activation, v, layer_omega(params.omega0, first && l == 0));
    }
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

std::vector<double> inr_eval(const InrParams& params, const ClusterPartition& partition, double t) {
  std::vector<double> out = residual_forward(params, partition, t);
  if (out.size() != params.n_vars()) throw ShapeError("inr_eval: residual width differs from N");
  for (std::size_t v = 0; v < out.size(); ++v) {
    out[v] += trend_eval(params.trend.row(v), t);
    out[v] += seasonal_eval(params.fourier_sin.row(v), params.fourier_cos.row(v), t);
  }
  return out;
}

Matrix query_series(const InrParams& params, const ClusterPartition& partition,
                    std::span<const double> t_grid) {
  Matrix out(params.n_vars(), t_grid.size());
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    const auto col = inr_eval(params, partition, t_grid[j]);
    for (std::size_t v = 0; v < col.size(); ++v) out(v, j) = col[v];
  }
  return out;
}

namespace {

ad::Var activate_graph(ad::Var z, Activation act, double omega) {
  if (act == Activation::Relu) return ad::relu(z);
  return ad::sin(omega == 1.0 ? z : ad::scale(z, omega));
}

}  // namespace

InrGraph inr_query_graph(ad::Tape& tape, std::span<const ad::Var> blocks,
                         const std::vector<InrBlock>& layout, std::span<const double> t_grid,
                         const InrConfig& cfg) {
  if (blocks.size() != layout.size()) throw ShapeError("inr_query_graph: block count mismatch");
  const std::size_t t_len = t_grid.size();
  const std::size_t n = layout.front().rows;
  using K = InrBlock::Kind;

  Matrix powers(cfg.trend_degree + 1, t_len);
  for (std::size_t j = 0; j < t_len; ++j) {
    double p = 1.0;
    for (std::size_t i = 0; i <= cfg.trend_degree; ++i, p *= t_grid[j]) powers(i, j) = p;
  }
  Matrix basis(2 * cfg.n_freqs, t_len);
  for (std::size_t f = 0; f < cfg.n_freqs; ++f)
    for (std::size_t j = 0; j < t_len; ++j) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(f + 1) * t_grid[j];
      basis(f, j) = std::sin(phase);
      basis(cfg.n_freqs + f, j) = std::cos(phase);
    }
  Matrix t_row(1, t_len);
  std::copy(t_grid.begin(), t_grid.end(), t_row.data.begin());

  InrGraph g;
  std::size_t i = 0;
  g.trend = ad::matmul(blocks[i++], tape.constant(std::move(powers)));
  if (cfg.n_freqs > 0) {
    g.seasonal = ad::matmul(blocks[i++], tape.constant(std::move(basis)));
  } else {
    g.seasonal = tape.constant(Matrix(n, t_len));
  }

  ad::Var h = tape.constant(std::move(t_row));
  bool first = true;
  for (std::size_t l = 0; l < cfg.global_layers; ++l) {
    if (layout[i].kind != K::GlobalWeight) throw ShapeError("inr_query_graph: layout order");
    ad::Var z = ad::add_col_bias(ad::matmul(blocks[i], h), blocks[i + 1]);
    i += 2;
    h = activate_graph(z, cfg.activation, layer_omega(cfg.omega0, first));
    first = false;
  }
  std::vector<ad::Var> outputs;
  while (i < layout.size()) {
    ad::Var x = h;
    for (std::size_t l = 0; l < cfg.group_layers; ++l) {
      if (layout[i].kind != K::GroupWeight) throw ShapeError("inr_query_graph: layout order");
      x = ad::add_col_bias(ad::matmul(blocks[i], x), blocks[i + 1]);
      i += 2;
      if (l + 1 < cfg.group_layers)
        x = activate_graph(x, cfg.activation, layer_omega(cfg.omega0, first && l == 0));
    }
    outputs.push_back(x);
  }
  g.residual = ad::concat_rows(outputs);
  g.total = ad::add(ad::add(g.trend, g.seasonal), g.residual);
  return g;
}

Matrix init_inr_block(const InrBlock& block, const InrConfig& cfg, Rng& rng) {
  using K = InrBlock::Kind;
  Matrix m(block.rows, block.cols);
  if (block.kind == K::Trend || block.kind == K::Seasonal) return m;

  // Fan-in of the affine map this block belongs to.
  std::size_t fan_in = 1;
  bool takes_t = false;
  bool output_layer = false;
  if (block.kind == K::GlobalWeight || block.kind == K::GlobalBias) {
    fan_in = block.layer == 0 ? 1 : cfg.hidden;
    takes_t = block.layer == 0;
  } else {
    fan_in = block.layer == 0 ? group_input_dim(cfg) : cfg.hidden;
    takes_t = block.layer == 0 && cfg.global_layers == 0;
    output_layer = block.layer + 1 == cfg.group_layers;
  }
  const double fan = static_cast<double>(fan_in);
  const bool is_weight = block.kind == K::GlobalWeight || block.kind == K::GroupWeight;
  double bound = 1.0 / std::sqrt(fan);
  if (is_weight && cfg.activation == Activation::Sine)
    bound = takes_t ? 1.0 / fan : std::sqrt(6.0 / fan);
  if (output_layer) bound *= kResidualOutputScale;
  for (double& v : m.data) v = rng.uniform(-bound, bound);
  return m;
}

}  // namespace imputeinr
