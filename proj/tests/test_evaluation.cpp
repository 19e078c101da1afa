#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "helpers.hpp"
#include "imputeinr/errors.hpp"
#include "imputeinr/evaluation.hpp"
#include "imputeinr/synthetic.hpp"

using namespace imputeinr;

namespace {

ModelConfig quick_model() {
  ModelConfig cfg;
  cfg.encoder.d_model = 16;
  cfg.encoder.channels_per_scale = 4;
  cfg.hypernet.n_blocks = 1;
  cfg.hypernet.n_heads = 2;
  return cfg;
}

BenchmarkSpec quick_spec() {
  BenchmarkSpec spec;
  spec.rates = {0.5};
  spec.seeds = {7};
  spec.configs = {{"quick", quick_model()}};
  spec.train.epochs = 5;
  spec.window = 48;
  spec.stride = 48;
  return spec;
}

}  // namespace

TEST_CASE("metrics") {
  const Matrix gt = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix all(2, 2, 1.0);
  const Metrics same = metrics(gt, gt, all);
  CHECK(same.mse == 0.0);
  CHECK(same.mae == 0.0);
  const Metrics m = metrics(Matrix::from_rows({{-1, 2}, {6, 4}}), gt, Matrix::from_rows({{1, 0}, {1, 0}}));
  CHECK(m.mse == 6.5);
  CHECK(m.mae == 2.5);
  CHECK(m.count == 2);
  const Metrics one = metrics(Matrix::from_rows({{1.1}}), Matrix::from_rows({{1.0}}), Matrix(1, 1, 1.0));
  CHECK(one.mse == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(one.mae == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS(metrics(gt, gt, Matrix(2, 2)), EmptyMaskSet);
}

TEST_CASE("metrics equal a brute-force oracle and satisfy MAE^2 <= MSE") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix p = testing::random_matrix(5, 11, rng, -3, 3);
    const Matrix g = testing::random_matrix(5, 11, rng, -3, 3);
    Matrix mask(5, 11);
    for (double& v : mask.data) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
    mask(0, 0) = 1.0;
    double sq = 0.0, ab = 0.0, n = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (mask.data[i] == 1.0) {
        sq += (p.data[i] - g.data[i]) * (p.data[i] - g.data[i]);
        ab += std::abs(p.data[i] - g.data[i]);
        n += 1.0;
      }
    const Metrics m = metrics(p, g, mask);
    CHECK(std::abs(m.mse - sq / n) <= 1e-12);
    CHECK(std::abs(m.mae - ab / n) <= 1e-12);
    CHECK(m.mae * m.mae <= m.mse + 1e-15);
  }
}

TEST_CASE("baselines") {
  TimeSeriesWindow w = testing::full_window(Matrix::from_rows({{1, 5, 3}, {4, 4, 4}, {7, 8, 9}}));
  CHECK(baseline_mean(w) == w.values);
  CHECK(baseline_zero(w) == w.values);
  w.mask(0, 1) = 0.0;
  w.values(0, 1) = std::numeric_limits<double>::quiet_NaN();
  w.mask(2, 0) = w.mask(2, 1) = w.mask(2, 2) = 0.0;
  std::vector<std::string> warnings;
  const Matrix mean = baseline_mean(w, &warnings);
  CHECK(mean(0, 1) == 2.0);
  CHECK(mean(0, 0) == 1.0);
  CHECK(mean(2, 1) == 0.0);
  CHECK(warnings.size() == 1);
  const Matrix zero = baseline_zero(w);
  CHECK(zero(0, 1) == 0.0);
  CHECK(zero(2, 2) == 0.0);
  CHECK(zero(1, 1) == 4.0);
}

TEST_CASE("scoring the originally observed cells of a retaining imputer gives zero error") {
  Rng rng(2);
  TimeSeriesWindow w = testing::full_window(testing::random_matrix(3, 10, rng));
  for (std::size_t i = 0; i < w.mask.size(); i += 4) w.mask.data[i] = 0.0;
  const Matrix filled = baseline_mean(w);
  const Metrics m = metrics(filled, w.values, w.mask);
  CHECK(m.mse == 0.0);
  CHECK(m.mae == 0.0);
}

TEST_CASE("aggregate metrics do not depend on window order") {
  std::vector<WindowMetrics> ws{{96, {0.5, 0.5, 2}, 1.0, 1.0}, {0, {1.0, 1.0, 1}, 1.0, 1.0}, {48, {4.0, 2.0, 1}, 4.0, 2.0}};
  const Metrics a = aggregate_metrics(ws);
  std::reverse(ws.begin(), ws.end());
  const Metrics b = aggregate_metrics(ws);
  CHECK(a.mse == b.mse);
  CHECK(a.mae == b.mae);
  CHECK(a.mse == 1.5);
  CHECK(a.count == 4);
}

TEST_CASE("ablation grid enumerates the eight switch settings") {
  const auto grid = ablation_grid(ModelConfig{});
  REQUIRE(grid.size() == 8);
  CHECK(grid[0].config.flags == AblationFlags{true, true, true});
  std::set<std::tuple<bool, bool, bool>> seen;
  std::set<std::string> names;
  for (const auto& g : grid) {
    seen.insert({g.config.flags.multi_scale, g.config.flags.clustering, g.config.flags.grouping});
    names.insert(g.name);
  }
  CHECK(seen.size() == 8);
  CHECK(names.size() == 8);
}

TEST_CASE("effective partition under the ablation switches") {
  const ClusterPartition c = partition_from_assignment({0, 1, 0, 1, 1});
  CHECK(effective_partition(c, {true, true, true}).pi == c.pi);
  const ClusterPartition no_group = effective_partition(c, {true, true, false});
  CHECK(no_group.k == 1);
  CHECK(no_group.pi == c.pi);
  const ClusterPartition no_cluster = effective_partition(c, {true, false, true});
  CHECK(no_cluster.pi == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(no_cluster.group_sizes() == c.group_sizes());
  const ClusterPartition neither = effective_partition(c, {true, false, false});
  CHECK(neither.k == 1);
  CHECK(neither.pi == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("evaluation masks are shared across configs") {
  const auto w = make_windows(gen_trend_sinusoid(1).window, 48, 48);
  CHECK(evaluation_mask(w[0], 0.5, 3).eval_mask == evaluation_mask(w[0], 0.5, 3).eval_mask);
  CHECK(evaluation_mask(w[0], 0.5, 3).eval_mask != evaluation_mask(w[1], 0.5, 3).eval_mask);
  CHECK(evaluation_mask(w[0], 0.5, 3).eval_mask != evaluation_mask(w[0], 0.5, 4).eval_mask);
}

TEST_CASE("run_benchmark") {
  const TimeSeries data = gen_trend_sinusoid(2).window;
  BenchmarkSpec spec = quick_spec();
  spec.include_baselines = false;
  auto reports = run_benchmark(data, spec);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].per_window.size() == 2);
  CHECK(reports[0].aggregate.count == 288);
  CHECK(reports[0].aggregate.mae * reports[0].aggregate.mae <= reports[0].aggregate.mse);

  spec.include_baselines = true;
  spec.rates = {0.1, 0.9};
  reports = run_benchmark(data, spec);
  REQUIRE(reports.size() == 6);
  CHECK(reports[0].method == "ImputeINR");
  CHECK(reports[1].method == "Mean");
  CHECK(reports[2].method == "Zero");
  CHECK(reports[3].mask_rate == 0.9);
  // baselines and the model are scored on the same cells
  CHECK(reports[3].aggregate.count == reports[4].aggregate.count);
  spec.rates = {1.5};
  CHECK_THROWS_AS(run_benchmark(data, spec), ConfigError);
}

TEST_CASE("standardized metrics scale") {
  const TimeSeries data = gen_trend_sinusoid(2).window;
  BenchmarkSpec spec = quick_spec();
  spec.configs.clear();
  spec.scale = MetricsScale::Standardized;
  const auto std_reports = run_benchmark(data, spec);
  spec.scale = MetricsScale::Raw;
  const auto raw_reports = run_benchmark(data, spec);
  CHECK(std_reports[0].scale == MetricsScale::Standardized);
  CHECK(std_reports[0].aggregate.mse != raw_reports[0].aggregate.mse);
  CHECK(parse_metrics_scale("raw") == MetricsScale::Raw);
  CHECK_THROWS_AS(parse_metrics_scale("log"), ConfigError);
}

TEST_CASE("report writers") {
  testing::TempDir dir;
  const TimeSeries data = gen_trend_sinusoid(5).window;
  BenchmarkSpec spec = quick_spec();
  spec.rates = {0.1, 0.3, 0.5, 0.7, 0.9};
  spec.configs.clear();
  const auto reports = run_benchmark(data, spec);
  write_report_json(dir / "r.json", reports);
  write_summary_csv(dir / "s.csv", reports);
  write_timings_json(dir / "t.json", reports);
  const auto doc = nlohmann::json::parse(testing::read_file(dir / "r.json"));
  CHECK(doc["schema_version"] == kReportSchemaVersion);
  CHECK(doc["reports"].size() == 10);
  CHECK(doc["reports"][0]["metrics_scale"] == "raw");
  CHECK_FALSE(doc["reports"][0].contains("wall_clock_seconds"));
  const std::string csv = testing::read_file(dir / "s.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(csv.rfind("mask_rate,Mean_mse,Mean_mae,Zero_mse,Zero_mae\n", 0) == 0);
  write_report_json(dir / "r2.json", run_benchmark(data, spec));
  CHECK(testing::read_file(dir / "r.json") == testing::read_file(dir / "r2.json"));
}

TEST_CASE("impute_series covers a ragged tail") {
  const TimeSeries full = gen_trend_sinusoid(6, 0.05, 100).window;
  const ClusterPartition part = partition_from_assignment({0, 1, 0, 1, 0, 1});
  ImputeInrModel model(quick_model(), 6, part, 1);
  TimeSeries holes = full;
  holes.mask(2, 99) = 0.0;
  holes.mask(0, 10) = 0.0;
  const Matrix out = impute_series(model, holes, 48);
  CHECK(out.cols == 100);
  for (double v : out.data) CHECK(std::isfinite(v));
  for (std::size_t i = 0; i < out.size(); ++i)
    if (holes.mask.data[i] == 1.0) CHECK(out.data[i] == holes.values.data[i]);
  CHECK_THROWS_AS(impute_series(model, make_windows(holes, 40, 40)[0], 48), WindowTooLarge);
}
