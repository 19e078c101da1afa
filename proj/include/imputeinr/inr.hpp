#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "imputeinr/autodiff.hpp"
#include "imputeinr/clustering.hpp"
#include "imputeinr/matrix.hpp"

namespace imputeinr {

class Rng;

enum class Activation { Sine, Relu };

/// Initial scale of the residual output layer relative to a hidden layer, so an untrained
/// function starts close to its trend + seasonal part.
inline constexpr double kResidualOutputScale = 0.1;

struct InrConfig {
  std::size_t trend_degree = 3;   // m
  std::size_t n_freqs = 8;        // F
  std::size_t hidden = 16;        // h
  std::size_t global_layers = 1;  // L1
  std::size_t group_layers = 1;   // L2
  double omega0 = 30.0;           // first-layer frequency for the sine activation
  Activation activation = Activation::Sine;
};

struct AffineLayer {
  Matrix weight;  // out×in
  Matrix bias;    // out×1
};

/// Parameters of one window's continuous function f(t) = trend + seasonal + residual, with
/// variables in reordered (group-contiguous) order.
struct InrParams {
  Matrix trend;        // N×(m+1), column i multiplies t^i
  Matrix fourier_sin;  // N×F, column i multiplies sin(2π(i+1)t)
  Matrix fourier_cos;  // N×F, column i multiplies cos(2π(i+1)t)
  std::vector<AffineLayer> global_layers;
  std::vector<std::vector<AffineLayer>> group_layers;  // [group][layer]
  double omega0 = 30.0;
  Activation activation = Activation::Sine;

  std::size_t n_vars() const { return trend.rows; }
};

/// One predicted parameter block (one INR token each). Seasonal sine and cosine banks share a
/// block laid out [sin | cos].
struct InrBlock {
  enum class Kind { Trend, Seasonal, GlobalWeight, GlobalBias, GroupWeight, GroupBias };
  Kind kind;
  std::size_t rows;
  std::size_t cols;
  std::size_t layer = 0;
  std::size_t group = 0;
  std::string name;

  std::size_t size() const { return rows * cols; }
};

/// Block list in token order: trend, seasonal, global layers (W, b), then per group its
/// layers (W, b). Zero-sized blocks (F = 0) are omitted.
std::vector<InrBlock> inr_layout(std::size_t n_vars, const std::vector<std::size_t>& group_sizes,
                                 const InrConfig& cfg);

/// Closed-form parameter count: N(m+1) + 2NF + Σ global (out·in + out) + Σ group (out·in + out).
std::size_t inr_total_len(std::size_t n_vars, const std::vector<std::size_t>& group_sizes,
                          const InrConfig& cfg);

std::vector<std::size_t> output_group_sizes(const InrParams& p);

InrParams unflatten_inr(std::span<const Matrix> blocks, const std::vector<InrBlock>& layout,
                        const std::vector<std::size_t>& group_sizes, const InrConfig& cfg);
std::vector<Matrix> flatten_inr(const InrParams& p, const std::vector<InrBlock>& layout);

/// Σ coeffs[i]·t^i by Horner's rule.
double trend_eval(std::span<const double> coeffs, double t);
/// Σ_{i=1..F} sin_c[i−1]·sin(2πit) + cos_c[i−1]·cos(2πit).
double seasonal_eval(std::span<const double> sin_c, std::span<const double> cos_c, double t);

/// Grouped residual MLP at a single timestamp; output in reordered variable order.
std::vector<double> residual_forward(const InrParams& params, const ClusterPartition& partition,
                                     double t);
std::vector<double> inr_eval(const InrParams& params, const ClusterPartition& partition, double t);
/// N×T grid whose column j is inr_eval at t_grid[j].
Matrix query_series(const InrParams& params, const ClusterPartition& partition,
                    std::span<const double> t_grid);

/// Taped evaluation over a whole time grid, used for training. `blocks` follow inr_layout.
struct InrGraph {
  ad::Var trend;
  ad::Var seasonal;
  ad::Var residual;
  ad::Var total;
};
InrGraph inr_query_graph(ad::Tape& tape, std::span<const ad::Var> blocks,
                         const std::vector<InrBlock>& layout, std::span<const double> t_grid,
                         const InrConfig& cfg);

/// Reference initialization for one block (SIREN-style for sine, fan-in uniform otherwise);
/// trend and seasonal blocks start at zero.
Matrix init_inr_block(const InrBlock& block, const InrConfig& cfg, Rng& rng);

}  // namespace imputeinr
