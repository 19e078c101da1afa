#include "imputeinr/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "imputeinr/errors.hpp"
#include "imputeinr/rng.hpp"

namespace imputeinr {

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) throw ConfigError("training mask rate must lie in (0, 1)");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
}

LossReport masked_mse(const Matrix& pred, const Matrix& gt, const Matrix& miss) {
  require_same_shape(pred, gt, "masked_mse");
  require_same_shape(pred, miss, "masked_mse mask");
  LossReport r;
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (miss.data[i] == 0.0) continue;
    const double d = pred.data[i] - gt.data[i];
    total += d * d;
    ++r.count;
  }
  if (r.count == 0) throw EmptyMaskSet("masked_mse: no scored positions");
  r.loss = total / static_cast<double>(r.count);
  return r;
}

void adam_step(std::span<Matrix> weights, std::span<const Matrix> grads, AdamState& state,
               const TrainConfig& cfg) {
  if (weights.size() != grads.size()) throw ShapeError("adam_step: weight/grad count mismatch");
  if (state.m.empty()) {
    for (const Matrix& w : weights) {
      state.m.emplace_back(w.rows, w.cols);
      state.v.emplace_back(w.rows, w.cols);
    }
  }
  if (state.m.size() != weights.size()) throw ShapeError("adam_step: optimizer state mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < weights.size(); ++p) {
    require_same_shape(weights[p], grads[p], "adam_step");
    Matrix& m = state.m[p];
    Matrix& v = state.v[p];
    for (std::size_t i = 0; i < weights[p].size(); ++i) {
      const double g = grads[p].data[i];
      m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g;
      v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m.data[i] / c1;
      const double v_hat = v.data[i] / c2;
      weights[p].data[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

double global_norm(std::span<const Matrix> grads) {
  double ss = 0.0;
  for (const Matrix& g : grads)
    for (double v : g.data) ss += v * v;
  return std::sqrt(ss);
}

double clip_global_norm(std::span<Matrix> grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Matrix& g : grads)
      for (double& v : g.data) v *= s;
  }
  return norm;
}

std::vector<PreparedWindow> prepare_windows(std::span<const TimeSeriesWindow> windows) {
  std::vector<PreparedWindow> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    auto [s, stats] = standardize(w);
    out.push_back({std::move(s), std::move(stats)});
  }
  return out;
}

namespace {

struct WindowStep {
  bool used = false;
  double loss = 0.0;
  std::vector<Matrix> grads;
  std::string error;
};

}  // namespace

TrainResult train(ImputeInrModel& model, std::span<const PreparedWindow> windows,
                  const TrainConfig& cfg, const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  if (windows.empty()) throw EmptyDataError("train: no windows");
  TrainResult result;
  AdamState adam;
  std::vector<std::size_t> order(windows.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(mix_seed(cfg.seed, 0x5eed0000ULL + epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.index(i)]);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    double norm_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - begin);
      std::vector<WindowStep> results(count);
      const long n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic)
      for (long b = 0; b < n; ++b) {
        const std::size_t wi = order[begin + static_cast<std::size_t>(b)];
        const PreparedWindow& pw = windows[wi];
        const std::uint64_t seed = mix_seed(mix_seed(cfg.seed, epoch), wi);
        MaskedWindow mw = apply_random_mask(pw.standardized, cfg.mask_rate, seed, 0.0);
        if (mw.masked.observed_count() == pw.standardized.observed_count()) continue;
        WindowStep& r = results[static_cast<std::size_t>(b)];
        try {
          r.loss = model.loss_and_gradients(mw.masked, pw.standardized.values, mw.eval_mask, &r.grads);
          for (const Matrix& g : r.grads)
            for (double v : g.data)
              if (!std::isfinite(v)) throw NumericsError("non-finite gradient");
          r.used = true;
        } catch (const std::exception& e) {
          r.error = e.what();
        }
      }
      // Deterministic reduction in batch order.
      std::vector<Matrix> grads;
      std::size_t used = 0;
      for (std::size_t b = 0; b < count; ++b) {
        WindowStep& r = results[b];
        if (!r.error.empty())
          throw NumericsError(r.error + " at epoch " + std::to_string(epoch) + ", window " +
                              std::to_string(order[begin + b]));
        if (!r.used) continue;
        if (grads.empty()) {
          grads = std::move(r.grads);
        } else {
          for (std::size_t p = 0; p < grads.size(); ++p)
            for (std::size_t i = 0; i < grads[p].size(); ++i) grads[p].data[i] += r.grads[p].data[i];
        }
        loss_sum += r.loss;
        ++loss_count;
        ++used;
      }
      if (used == 0) continue;
      const double inv = 1.0 / static_cast<double>(used);
      for (Matrix& g : grads)
        for (double& v : g.data) v *= inv;
      norm_sum += clip_global_norm(grads, cfg.grad_clip);
      ++steps;
      adam_step(model.params().values(), grads, adam, cfg);
    }
    EpochStats stats{epoch, loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0,
                     steps ? norm_sum / static_cast<double>(steps) : 0.0};
    result.curve.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

void write_loss_curve_csv(const std::string& path, const TrainResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << "epoch,mean_loss,grad_norm\n";
  for (const EpochStats& s : result.curve)
    out << s.epoch << ',' << format_number(s.mean_loss) << ',' << format_number(s.grad_norm) << '\n';
}

double gradient_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max(std::abs(analytic) + std::abs(numeric), kGradCheckFloor);
}

GradCheckResult gradient_check(ImputeInrModel& model, const TimeSeriesWindow& input,
                               const Matrix& target, const Matrix& miss, double step) {
  std::vector<Matrix> analytic;
  model.loss_and_gradients(input, target, miss, &analytic);
  GradCheckResult result;
  ParameterStore& params = model.params();
  for (std::size_t p = 0; p < params.size(); ++p) {
    GradCheckEntry entry{params.name(p), 0, 0.0};
    Matrix& w = params.value(p);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w.data[i];
      w.data[i] = saved + step;
      const double up = model.loss_and_gradients(input, target, miss, nullptr);
      w.data[i] = saved - step;
      const double down = model.loss_and_gradients(input, target, miss, nullptr);
      w.data[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      entry.max_rel_error = std::max(entry.max_rel_error, gradient_relative_error(analytic[p].data[i], numeric));
      ++entry.checked;
    }
    result.max_rel_error = std::max(result.max_rel_error, entry.max_rel_error);
    result.entries.push_back(std::move(entry));
  }
  return result;
}

GradCheckFixture tiny_gradcheck_fixture(std::uint64_t seed) {
  GradCheckFixture f;
  f.config.encoder.d_model = 8;
  f.config.hypernet.n_blocks = 1;
  f.config.inr.hidden = 16;
  f.config.inr.n_freqs = 2;
  f.config.inr.trend_degree = 2;

  constexpr std::size_t n = 4;
  constexpr std::size_t t = 16;
  Rng rng(seed);
  TimeSeriesWindow w;
  w.values = Matrix(n, t);
  w.mask = Matrix(n, t, 1.0);
  w.t_grid = normalized_time_grid(t);
  for (std::size_t v = 0; v < n; ++v) {
    w.variable_names.push_back("v" + std::to_string(v));
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t j = 0; j < t; ++j)
      w.values(v, j) = std::sin(2.0 * std::numbers::pi * w.t_grid[j] + phase) + 0.1 * rng.normal();
  }
  auto [standardized, stats] = standardize(w);
  f.target = standardized.values;
  MaskedWindow mw = apply_random_mask(standardized, 0.3, mix_seed(seed, 1), 0.0);
  f.input = std::move(mw.masked);
  f.miss = std::move(mw.eval_mask);
  // Two clusters of two so both the global and the per-group paths are exercised.
  f.partition = partition_from_assignment({0, 1, 0, 1});
  return f;
}

}  // namespace imputeinr
