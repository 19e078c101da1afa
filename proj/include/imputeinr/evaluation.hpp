#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "imputeinr/clustering.hpp"
#include "imputeinr/model.hpp"
#include "imputeinr/timeseries.hpp"
#include "imputeinr/training.hpp"

namespace imputeinr {

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  std::size_t count = 0;
};

/// MSE and MAE over eval_mask = 1. Throws EmptyMaskSet when nothing is scored.
Metrics metrics(const Matrix& pred, const Matrix& gt, const Matrix& eval_mask);

/// Missing cells filled with the variable's observed mean; a variable with no observations
/// falls back to 0 and appends a message to `warnings`.
Matrix baseline_mean(const TimeSeriesWindow& w, std::vector<std::string>* warnings = nullptr);
Matrix baseline_zero(const TimeSeriesWindow& w);

enum class MetricsScale { Raw, Standardized };
MetricsScale parse_metrics_scale(const std::string& s);
std::string to_string(MetricsScale s);

/// Clusters the variables of a (possibly masked) series once, on standardized values.
ClusterPartition cluster_series(const TimeSeries& series, double epsilon);

/// Standardize → model → destandardize → keep observations. Returns raw-unit values.
Matrix impute_window(const ImputeInrModel& model, const TimeSeriesWindow& window);

/// Imputes a whole series with fixed-length windows: consecutive windows of the model
/// length, plus one window aligned to the end when the length is not a multiple.
Matrix impute_series(const ImputeInrModel& model, const TimeSeries& series, std::size_t window);

struct FittedModel {
  ImputeInrModel model;
  ClusterPartition clusters;  // before the ablation switches
  TrainResult result;
};

/// Clusters `clustering_source`, builds the model and trains it on `windows`. Model init and
/// the training seed are both derived from `seed`.
FittedModel fit_model(const ModelConfig& cfg, const TimeSeries& clustering_source,
                      std::span<const TimeSeriesWindow> windows, TrainConfig train, std::uint64_t seed,
                      const std::function<void(const EpochStats&)>& on_epoch = {});

struct WindowMetrics {
  std::size_t start = 0;
  Metrics metrics;
  double sum_sq = 0.0;
  double sum_abs = 0.0;
};

struct ImputationReport {
  std::string method;  // "ImputeINR", "Mean", "Zero"
  std::string config_name;
  double mask_rate = 0.0;
  std::uint64_t seed = 0;
  AblationFlags flags;
  MetricsScale scale = MetricsScale::Raw;
  std::vector<WindowMetrics> per_window;
  Metrics aggregate;
  double wall_clock_seconds = 0.0;
};

/// Pools per-window sums in ascending window-start order, so the aggregate does not depend
/// on evaluation order.
Metrics aggregate_metrics(std::vector<WindowMetrics> per_window);

struct NamedConfig {
  std::string name;
  ModelConfig config;
};

/// The 8 on/off combinations of the three ablation switches over `base`, all-on first.
std::vector<NamedConfig> ablation_grid(const ModelConfig& base);

struct BenchmarkSpec {
  std::vector<double> rates{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<std::uint64_t> seeds{0};
  std::vector<NamedConfig> configs;
  TrainConfig train;
  std::size_t window = 96;
  std::size_t stride = 96;
  MetricsScale scale = MetricsScale::Raw;
  bool include_baselines = true;
};

/// Evaluation mask for one window of one (rate, seed) cell; identical across model configs.
MaskedWindow evaluation_mask(const TimeSeriesWindow& w, double rate, std::uint64_t seed);

/// For every (rate, seed): mask each window, then per config cluster the masked series,
/// train, impute and score the hidden cells; baselines are scored on the same masks.
/// Reports are ordered by (rate, seed, method, config order).
std::vector<ImputationReport> run_benchmark(const TimeSeries& dataset, const BenchmarkSpec& spec);

inline constexpr int kReportSchemaVersion = 1;

/// Writes the reports as JSON. Wall-clock timings are excluded so that identical runs give
/// byte-identical files; write_timings_json records them separately.
void write_report_json(const std::filesystem::path& path, const std::vector<ImputationReport>& reports);
void write_timings_json(const std::filesystem::path& path, const std::vector<ImputationReport>& reports);
/// Rows = mask rates, columns = <method>_mse / <method>_mae averaged over seeds.
void write_summary_csv(const std::filesystem::path& path, const std::vector<ImputationReport>& reports);

}  // namespace imputeinr
