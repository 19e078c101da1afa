#include "imputeinr/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "imputeinr/autodiff.hpp"
#include "imputeinr/errors.hpp"
#include "imputeinr/rng.hpp"
#include "imputeinr/training.hpp"

namespace imputeinr {

TimeSeriesWindow gen_two_distribution(std::uint64_t seed, std::size_t length) {
  if (length < 8) throw ShapeError("synthetic series need T >= 8");
  Rng rng(seed);
  const double shared = std::sqrt(kPairCorrelation);
  const double own = std::sqrt(1.0 - kPairCorrelation);
  TimeSeriesWindow w;
  w.values = Matrix(4, length);
  w.mask = Matrix(4, length, 1.0);
  w.variable_names = {"v1", "v2", "v3", "v4"};
  w.t_grid = normalized_time_grid(length);
  for (std::size_t t = 0; t < length; ++t) {
    const double z_low = rng.normal();
    const double z_high = rng.normal();
    w.values(0, t) = shared * z_low + own * rng.normal();
    w.values(1, t) = shared * z_low + own * rng.normal();
    w.values(2, t) = 1.0 + std::sqrt(3.0) * (shared * z_high + own * rng.normal());
    w.values(3, t) = 1.0 + std::sqrt(3.0) * (shared * z_high + own * rng.normal());
  }
  return w;
}

double TrendSinusoidCoeffs::eval(double t) const {
  double v = trend[0] + t * (trend[1] + t * (trend[2] + t * trend[3]));
  for (std::size_t i = 0; i < 2; ++i) {
    const double phase = 2.0 * std::numbers::pi * freqs[i] * t;
    v += amp_sin[i] * std::sin(phase) + amp_cos[i] * std::cos(phase);
  }
  return v;
}

TrendSinusoidSeries gen_trend_sinusoid(std::uint64_t seed, double noise, std::size_t length) {
  if (length < 8) throw ShapeError("synthetic series need T >= 8");
  Rng rng(seed);
  constexpr std::size_t kFamilies = 2;
  std::array<TrendSinusoidCoeffs, kFamilies> family{};
  // Family frequencies are drawn from disjoint ranges so the families decorrelate.
  const std::array<std::array<int, 2>, kFamilies> ranges{{{1, 3}, {4, 6}}};
  for (std::size_t f = 0; f < kFamilies; ++f) {
    TrendSinusoidCoeffs& c = family[f];
    for (double& a : c.trend) a = rng.uniform(-1.0, 1.0);
    const int lo = ranges[f][0];
    const int span = ranges[f][1] - lo + 1;
    c.freqs[0] = lo + static_cast<int>(rng.index(static_cast<std::uint64_t>(span)));
    do c.freqs[1] = lo + static_cast<int>(rng.index(static_cast<std::uint64_t>(span)));
    while (c.freqs[1] == c.freqs[0]);
    for (std::size_t i = 0; i < 2; ++i) {
      c.amp_sin[i] = rng.uniform(-1.5, 1.5);
      c.amp_cos[i] = rng.uniform(-1.5, 1.5);
    }
  }

  TrendSinusoidSeries out;
  TimeSeriesWindow& w = out.window;
  w.values = Matrix(kTrendSinusoidVars, length);
  w.mask = Matrix(kTrendSinusoidVars, length, 1.0);
  w.t_grid = normalized_time_grid(length);
  for (std::size_t v = 0; v < kTrendSinusoidVars; ++v) {
    const std::size_t f = v % kFamilies;
    const double gain = rng.uniform(0.7, 1.3);
    TrendSinusoidCoeffs c = family[f];
    for (double& a : c.trend) a = gain * a + rng.uniform(-0.1, 0.1);
    c.trend[0] += rng.uniform(-2.0, 2.0);
    for (std::size_t i = 0; i < 2; ++i) {
      c.amp_sin[i] = gain * c.amp_sin[i] + rng.uniform(-0.1, 0.1);
      c.amp_cos[i] = gain * c.amp_cos[i] + rng.uniform(-0.1, 0.1);
    }
    out.coeffs.push_back(c);
    out.family.push_back(f);
    w.variable_names.push_back("x" + std::to_string(v));
    for (std::size_t t = 0; t < length; ++t) {
      const double eps = noise > 0.0 ? noise * rng.normal() : 0.0;
      w.values(v, t) = c.eval(w.t_grid[t]) + eps;
    }
  }
  return out;
}

VariantTag parse_variant_tag(char tag) {
  switch (tag) {
    case 'A': case 'a': return VariantTag::A;
    case 'B': case 'b': return VariantTag::B;
    case 'C': case 'c': return VariantTag::C;
    case 'D': case 'd': return VariantTag::D;
    default: throw ConfigError(std::string("unknown model variant '") + tag + "'");
  }
}

ModelVariant model_variant(VariantTag tag, const ClusterPartition& partition) {
  ModelVariant v{tag, InrConfig{}, {}};
  // One hidden group layer before each group's output layer: with a single (output) group
  // layer every coordinate is an independent affine read-out and grouping cannot matter.
  v.inr.group_layers = 2;
  v.inr.hidden = kVariantHidden;
  const std::size_t n = partition.n_vars();
  switch (tag) {
    case VariantTag::A:
      v.partition = contiguous_partition({n});
      break;
    case VariantTag::B:
      v.partition = contiguous_partition({n});
      v.partition.pi = partition.pi;
      break;
    case VariantTag::C:
      v.partition = partition;
      break;
    case VariantTag::D: {
      // Deal each cluster's members round-robin across the groups so that every group
      // mixes clusters: {v1,v2},{v3,v4} becomes {v1,v3},{v2,v4}.
      std::vector<std::size_t> assignment(n);
      std::size_t next = 0;
      for (const auto& members : partition.members())
        for (std::size_t m : members) assignment[m] = next++ % partition.k;
      v.partition = partition_from_assignment(assignment);
      break;
    }
  }
  return v;
}

FitResult fit_inr_direct(const TimeSeriesWindow& data, const ModelVariant& variant,
                         std::size_t steps, double lr, std::uint64_t seed) {
  const std::size_t n = data.n_vars();
  const auto sizes = variant.partition.group_sizes();
  const auto layout = inr_layout(n, sizes, variant.inr);
  Rng rng(seed);
  std::vector<Matrix> weights;
  for (const InrBlock& b : layout) weights.push_back(init_inr_block(b, variant.inr, rng));

  const Matrix target = reorder_rows(data.values, variant.partition);
  const Matrix all(n, data.length(), 1.0);
  TrainConfig cfg;
  cfg.lr = lr;
  AdamState adam;
  FitResult result;
  const auto step = [&](bool update) {
    ad::Tape tape;
    std::vector<ad::Var> blocks;
    for (const Matrix& w : weights) blocks.push_back(tape.variable(w));
    ad::Var pred = inr_query_graph(tape, blocks, layout, data.t_grid, variant.inr).total;
    ad::Var loss = ad::masked_mse(pred, target, all);
    result.loss_curve.push_back(loss.value()(0, 0));
    if (!update) return;
    tape.backward(loss);
    std::vector<Matrix> grads;
    for (const ad::Var& b : blocks) grads.push_back(tape.grad(b));
    adam_step(weights, grads, adam, cfg);
  };
  for (std::size_t s = 0; s < steps; ++s) step(true);
  step(false);
  result.final_mse = result.loss_curve.back();
  return result;
}

}  // namespace imputeinr
