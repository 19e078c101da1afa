#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "imputeinr/matrix.hpp"
#include "imputeinr/model.hpp"
#include "imputeinr/timeseries.hpp"

namespace imputeinr {

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 300;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  double mask_rate = 0.5;  // self-masking rate over observed entries
  double grad_clip = 1.0;  // global-norm threshold; <= 0 disables

  void validate() const;
};

struct LossReport {
  double loss = 0.0;
  std::size_t count = 0;  // |M_miss|
  double grad_norm = 0.0;
};

/// (1/|M|) Σ miss·(pred − gt)². Throws EmptyMaskSet when nothing is scored.
LossReport masked_mse(const Matrix& pred, const Matrix& gt, const Matrix& miss);

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::size_t step = 0;
};

/// One bias-corrected ADAM update of `weights` in place.
void adam_step(std::span<Matrix> weights, std::span<const Matrix> grads, AdamState& state,
               const TrainConfig& cfg);

double global_norm(std::span<const Matrix> grads);
/// Rescales `grads` so their global norm is at most `max_norm`; returns the norm before.
double clip_global_norm(std::span<Matrix> grads, double max_norm);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double grad_norm = 0.0;  // mean pre-clip norm over the epoch's steps
};

struct TrainResult {
  std::vector<EpochStats> curve;
};

/// A window prepared for training: standardized values plus the stats to undo it.
struct PreparedWindow {
  TimeSeriesWindow standardized;
  StandardizationStats stats;
};
std::vector<PreparedWindow> prepare_windows(std::span<const TimeSeriesWindow> windows);

/// Mask-and-reconstruct training. Each epoch visits the windows in a seeded shuffled order;
/// every window draws a fresh training mask, and a batch's per-window gradients (computed in
/// parallel) are averaged in window order before clipping and the ADAM step.
TrainResult train(ImputeInrModel& model, std::span<const PreparedWindow> windows,
                  const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

void write_loss_curve_csv(const std::string& path, const TrainResult& result);

/// Central finite differences of the model loss against its analytic gradients.
struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
};
struct GradCheckResult {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
};

/// Relative error |a − n| / max(|a| + |n|, floor); the floor keeps entries whose true
/// gradient is zero from dividing round-off by round-off.
inline constexpr double kGradCheckFloor = 1e-6;
double gradient_relative_error(double analytic, double numeric);

GradCheckResult gradient_check(ImputeInrModel& model, const TimeSeriesWindow& input,
                               const Matrix& target, const Matrix& miss, double step = 1e-5);

/// The tiny configuration used for gradient checking (N=4, T=16, d_model=8, one block,
/// h=16, F=2, m=2), with a fixed fixture window and masks.
struct GradCheckFixture {
  ModelConfig config;
  TimeSeriesWindow input;
  Matrix target;
  Matrix miss;
  ClusterPartition partition;
};
GradCheckFixture tiny_gradcheck_fixture(std::uint64_t seed);

}  // namespace imputeinr
