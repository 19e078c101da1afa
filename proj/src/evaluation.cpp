#include "imputeinr/evaluation.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "imputeinr/errors.hpp"
#include "imputeinr/rng.hpp"

namespace imputeinr {

using nlohmann::ordered_json;

Metrics metrics(const Matrix& pred, const Matrix& gt, const Matrix& eval_mask) {
  require_same_shape(pred, gt, "metrics");
  require_same_shape(pred, eval_mask, "metrics mask");
  double sq = 0.0;
  double ab = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (eval_mask.data[i] == 0.0) continue;
    const double d = pred.data[i] - gt.data[i];
    sq += d * d;
    ab += std::abs(d);
    ++count;
  }
  if (count == 0) throw EmptyMaskSet("metrics: no scored positions");
  return {sq / static_cast<double>(count), ab / static_cast<double>(count), count};
}

Matrix baseline_mean(const TimeSeriesWindow& w, std::vector<std::string>* warnings) {
  Matrix filled(w.n_vars(), w.length());
  for (std::size_t v = 0; v < w.n_vars(); ++v) {
    double sum = 0.0;
    double count = 0.0;
    for (std::size_t t = 0; t < w.length(); ++t)
      if (w.mask(v, t) == 1.0) {
        sum += w.values(v, t);
        count += 1.0;
      }
    double fill = 0.0;
    if (count > 0.0) {
      fill = sum / count;
    } else if (warnings) {
      warnings->push_back("variable " + w.variable_names[v] + " has no observations; filled with 0");
    }
    for (std::size_t t = 0; t < w.length(); ++t) filled(v, t) = fill;
  }
  return merge_imputed(w, filled);
}

Matrix baseline_zero(const TimeSeriesWindow& w) {
  return merge_imputed(w, Matrix(w.n_vars(), w.length(), 0.0));
}

MetricsScale parse_metrics_scale(const std::string& s) {
  if (s == "raw") return MetricsScale::Raw;
  if (s == "standardized") return MetricsScale::Standardized;
  throw ConfigError("metrics scale must be 'raw' or 'standardized', got '" + s + "'");
}

std::string to_string(MetricsScale s) { return s == MetricsScale::Raw ? "raw" : "standardized"; }

ClusterPartition cluster_series(const TimeSeries& series, double epsilon) {
  return agglomerate(similarity_matrix(standardize(series).first), epsilon);
}

Matrix impute_window(const ImputeInrModel& model, const TimeSeriesWindow& window) {
  auto [standardized, stats] = standardize(window);
  return merge_imputed(window, destandardize(model.predict(standardized), stats));
}

Matrix impute_series(const ImputeInrModel& model, const TimeSeries& series, std::size_t window) {
  const std::size_t t_full = series.length();
  window_count(t_full, window, window);
  Matrix out(series.n_vars(), t_full);
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + window <= t_full; s += window) starts.push_back(s);
  if (starts.back() + window < t_full) starts.push_back(t_full - window);
  std::vector<bool> done(t_full, false);
  for (std::size_t start : starts) {
    TimeSeriesWindow w;
    w.values = Matrix(series.n_vars(), window);
    w.mask = Matrix(series.n_vars(), window);
    for (std::size_t v = 0; v < series.n_vars(); ++v)
      for (std::size_t t = 0; t < window; ++t) {
        w.values(v, t) = series.values(v, start + t);
        w.mask(v, t) = series.mask(v, start + t);
      }
    w.variable_names = series.variable_names;
    w.t_grid = normalized_time_grid(window);
    w.start = start;
    const Matrix filled = impute_window(model, w);
    for (std::size_t t = 0; t < window; ++t) {
      if (done[start + t]) continue;
      for (std::size_t v = 0; v < series.n_vars(); ++v) out(v, start + t) = filled(v, t);
      done[start + t] = true;
    }
  }
  return out;
}

FittedModel fit_model(const ModelConfig& cfg, const TimeSeries& clustering_source,
                      std::span<const TimeSeriesWindow> windows, TrainConfig train, std::uint64_t seed,
                      const std::function<void(const EpochStats&)>& on_epoch) {
  ClusterPartition clusters = cluster_series(clustering_source, cfg.cluster_epsilon);
  ImputeInrModel model(cfg, clustering_source.n_vars(), effective_partition(clusters, cfg.flags),
                       mix_seed(seed, 1));
  train.seed = mix_seed(seed, 2);
  const auto prepared = prepare_windows(windows);
  TrainResult result = imputeinr::train(model, prepared, train, on_epoch);
  return {std::move(model), std::move(clusters), std::move(result)};
}

Metrics aggregate_metrics(std::vector<WindowMetrics> per_window) {
  std::sort(per_window.begin(), per_window.end(),
            [](const WindowMetrics& a, const WindowMetrics& b) { return a.start < b.start; });
  double sq = 0.0;
  double ab = 0.0;
  std::size_t count = 0;
  for (const WindowMetrics& w : per_window) {
    sq += w.sum_sq;
    ab += w.sum_abs;
    count += w.metrics.count;
  }
  if (count == 0) throw EmptyMaskSet("aggregate_metrics: no scored positions");
  return {sq / static_cast<double>(count), ab / static_cast<double>(count), count};
}

std::vector<NamedConfig> ablation_grid(const ModelConfig& base) {
  std::vector<NamedConfig> out;
  for (int bits = 7; bits >= 0; --bits) {
    ModelConfig c = base;
    c.flags = {(bits & 4) != 0, (bits & 2) != 0, (bits & 1) != 0};
    std::string name = std::string("ms") + (c.flags.multi_scale ? "1" : "0") + "_vc" +
                       (c.flags.clustering ? "1" : "0") + "_ag" + (c.flags.grouping ? "1" : "0");
    out.push_back({std::move(name), std::move(c)});
  }
  return out;
}

MaskedWindow evaluation_mask(const TimeSeriesWindow& w, double rate, std::uint64_t seed) {
  const auto rate_key = static_cast<std::uint64_t>(std::llround(rate * 1e6));
  return apply_random_mask(w, rate, mix_seed(mix_seed(seed, rate_key), w.start));
}

namespace {

WindowMetrics score_window(const Matrix& pred, const TimeSeriesWindow& truth,
                           const MaskedWindow& masked, MetricsScale scale) {
  WindowMetrics wm;
  wm.start = truth.start;
  Matrix p = pred;
  Matrix g = truth.values;
  if (scale == MetricsScale::Standardized) {
    const StandardizationStats stats = standardize(masked.masked).second;
    for (std::size_t v = 0; v < p.rows; ++v)
      for (std::size_t t = 0; t < p.cols; ++t) {
        p(v, t) = (p(v, t) - stats.mean[v]) / stats.std[v];
        g(v, t) = (g(v, t) - stats.mean[v]) / stats.std[v];
      }
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (masked.eval_mask.data[i] == 0.0) continue;
    const double d = p.data[i] - g.data[i];
    wm.sum_sq += d * d;
    wm.sum_abs += std::abs(d);
    ++wm.metrics.count;
  }
  if (wm.metrics.count > 0) {
    wm.metrics.mse = wm.sum_sq / static_cast<double>(wm.metrics.count);
    wm.metrics.mae = wm.sum_abs / static_cast<double>(wm.metrics.count);
  }
  return wm;
}

TimeSeries concatenate(const std::vector<TimeSeriesWindow>& windows) {
  TimeSeries s;
  const std::size_t n = windows.front().n_vars();
  const std::size_t t = windows.front().length();
  s.values = Matrix(n, t * windows.size());
  s.mask = Matrix(n, t * windows.size());
  for (std::size_t w = 0; w < windows.size(); ++w)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t j = 0; j < t; ++j) {
        s.values(v, w * t + j) = windows[w].values(v, j);
        s.mask(v, w * t + j) = windows[w].mask(v, j);
      }
  s.variable_names = windows.front().variable_names;
  s.t_grid = normalized_time_grid(s.values.cols);
  return s;
}

}  // namespace

std::vector<ImputationReport> run_benchmark(const TimeSeries& dataset, const BenchmarkSpec& spec) {
  for (double r : spec.rates)
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("mask rates must lie in [0, 1]");
  const std::vector<TimeSeriesWindow> windows = make_windows(dataset, spec.window, spec.stride);
  std::vector<ImputationReport> reports;
  using clock = std::chrono::steady_clock;

  for (double rate : spec.rates)
    for (std::uint64_t seed : spec.seeds) {
      std::vector<MaskedWindow> masked;
      std::vector<TimeSeriesWindow> inputs;
      for (const auto& w : windows) {
        masked.push_back(evaluation_mask(w, rate, seed));
        inputs.push_back(masked.back().masked);
      }
      const auto make_report = [&](std::string method, std::string config_name, AblationFlags flags) {
        ImputationReport r;
        r.method = std::move(method);
        r.config_name = std::move(config_name);
        r.mask_rate = rate;
        r.seed = seed;
        r.flags = flags;
        r.scale = spec.scale;
        return r;
      };
      const auto finish = [&](ImputationReport& r, const std::vector<Matrix>& preds, clock::time_point t0) {
        for (std::size_t i = 0; i < windows.size(); ++i)
          r.per_window.push_back(score_window(preds[i], windows[i], masked[i], spec.scale));
        r.aggregate = aggregate_metrics(r.per_window);
        r.wall_clock_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        reports.push_back(std::move(r));
      };

      for (const NamedConfig& nc : spec.configs) {
        const auto t0 = clock::now();
        ImputationReport r = make_report("ImputeINR", nc.name, nc.config.flags);
        const FittedModel fitted = fit_model(nc.config, concatenate(inputs), inputs, spec.train, seed);
        std::vector<Matrix> preds;
        for (const auto& in : inputs) preds.push_back(impute_window(fitted.model, in));
        finish(r, preds, t0);
      }
      if (spec.include_baselines) {
        for (const char* method : {"Mean", "Zero"}) {
          const auto t0 = clock::now();
          ImputationReport r = make_report(method, "", AblationFlags{});
          std::vector<Matrix> preds;
          for (const auto& in : inputs)
            preds.push_back(std::string(method) == "Mean" ? baseline_mean(in) : baseline_zero(in));
          finish(r, preds, t0);
        }
      }
    }
  return reports;
}

namespace {

ordered_json flags_json(const AblationFlags& f) {
  return {{"multi_scale", f.multi_scale}, {"clustering", f.clustering}, {"grouping", f.grouping}};
}

}  // namespace

void write_report_json(const std::filesystem::path& path, const std::vector<ImputationReport>& reports) {
  ordered_json doc;
  doc["schema"] = "imputeinr-report";
  doc["schema_version"] = kReportSchemaVersion;
  doc["reports"] = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json j;
    j["method"] = r.method;
    j["config"] = r.config_name;
    j["mask_rate"] = r.mask_rate;
    j["seed"] = r.seed;
    j["flags"] = flags_json(r.flags);
    j["metrics_scale"] = to_string(r.scale);
    j["mse"] = r.aggregate.mse;
    j["mae"] = r.aggregate.mae;
    j["scored"] = r.aggregate.count;
    j["windows"] = ordered_json::array();
    for (const auto& w : r.per_window)
      j["windows"].push_back({{"start", w.start},
                              {"mse", w.metrics.mse},
                              {"mae", w.metrics.mae},
                              {"scored", w.metrics.count}});
    doc["reports"].push_back(std::move(j));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void write_timings_json(const std::filesystem::path& path, const std::vector<ImputationReport>& reports) {
  ordered_json doc = ordered_json::array();
  for (const auto& r : reports)
    doc.push_back({{"method", r.method},
                   {"config", r.config_name},
                   {"mask_rate", r.mask_rate},
                   {"seed", r.seed},
                   {"wall_clock_seconds", r.wall_clock_seconds}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<ImputationReport>& reports) {
  std::vector<std::string> columns;
  std::vector<double> rates;
  // (rate, column) → (sum of mse, sum of mae, runs)
  std::map<std::pair<double, std::string>, std::array<double, 3>> cells;
  for (const auto& r : reports) {
    const std::string col = r.config_name.empty() ? r.method : r.method + "[" + r.config_name + "]";
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (std::find(rates.begin(), rates.end(), r.mask_rate) == rates.end()) rates.push_back(r.mask_rate);
    auto& c = cells[{r.mask_rate, col}];
    c[0] += r.aggregate.mse;
    c[1] += r.aggregate.mae;
    c[2] += 1.0;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "mask_rate";
  for (const auto& c : columns) out << ',' << c << "_mse," << c << "_mae";
  out << '\n';
  for (double rate : rates) {
    out << format_number(rate);
    for (const auto& c : columns) {
      auto it = cells.find({rate, c});
      if (it == cells.end()) {
        out << ",,";
        continue;
      }
      const auto& v = it->second;
      out << ',' << format_number(v[0] / v[2]) << ',' << format_number(v[1] / v[2]);
    }
    out << '\n';
  }
}

}  // namespace imputeinr
