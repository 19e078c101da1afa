#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include <CLI11.hpp>
#include <json.hpp>

#include "imputeinr/checkpoint.hpp"
#include "imputeinr/config.hpp"
#include "imputeinr/errors.hpp"
#include "imputeinr/evaluation.hpp"
#include "imputeinr/svg.hpp"
#include "imputeinr/synthetic.hpp"

namespace imputeinr::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  double mask_rate = 0.0;
  std::size_t epochs = 0;
  bool no_multiscale = false;
  bool no_clustering = false;
  bool no_grouping = false;
  std::string metrics_scale;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* rate_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* scale_opt = nullptr;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "key=value config file")->check(CLI::ExistingFile);
    seed_opt = app.add_option("--seed", seed, "master seed");
    rate_opt = app.add_option("--mask-rate", mask_rate, "evaluation mask rate (replaces the rate list)");
    epochs_opt = app.add_option("--epochs", epochs, "training epochs");
    app.add_flag("--no-multiscale", no_multiscale, "disable the multi-scale convolution");
    app.add_flag("--no-clustering", no_clustering, "disable variable clustering");
    app.add_flag("--no-grouping", no_grouping, "use one residual group for all variables");
    scale_opt = app.add_option("--metrics-scale", metrics_scale, "raw or standardized")
                    ->check(CLI::IsMember({"raw", "standardized"}));
  }

  std::vector<std::pair<std::string, std::string>> overrides() const {
    std::vector<std::pair<std::string, std::string>> out;
    if (seed_opt->count()) out.emplace_back("seed", std::to_string(seed));
    if (rate_opt->count()) out.emplace_back("mask_rates", format_number(mask_rate));
    if (epochs_opt->count()) out.emplace_back("epochs", std::to_string(epochs));
    if (no_multiscale) out.emplace_back("multi_scale", "false");
    if (no_clustering) out.emplace_back("clustering", "false");
    if (no_grouping) out.emplace_back("grouping", "false");
    if (scale_opt->count()) out.emplace_back("metrics_scale", metrics_scale);
    return out;
  }

  RunConfig resolve() const { return layered_config(config, overrides()); }
};

void write_json(const fs::path& path, const ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

ordered_json config_echo(const RunConfig& cfg) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : config_entries(cfg)) j[k] = v;
  return j;
}

int cmd_impute(const CommonFlags&, const std::string& input, const std::string& ckpt_path,
               const std::string& output, const std::string& plot, std::ostream& out) {
  LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
  const CsvTable table = read_csv_table(input);
  const TimeSeries series = series_from_table(table);
  if (series.n_vars() != ckpt.model.n_vars())
    throw ShapeError("input has " + std::to_string(series.n_vars()) + " variables, checkpoint expects " +
                     std::to_string(ckpt.model.n_vars()));
  const Matrix imputed = impute_series(ckpt.model, series, ckpt.meta.window);

  std::vector<std::size_t> fills(series.n_vars(), 0);
  std::ofstream csv(output, std::ios::binary);
  if (!csv) throw ParseError("cannot write " + output);
  for (std::size_t v = 0; v < table.header.size(); ++v) csv << (v ? "," : "") << table.header[v];
  csv << '\n';
  for (std::size_t t = 0; t < series.length(); ++t) {
    for (std::size_t v = 0; v < series.n_vars(); ++v) {
      if (v) csv << ',';
      if (series.mask(v, t) == 1.0) {
        csv << table.rows[t][v];
        continue;
      }
      const double x = imputed(v, t);
      if (!std::isfinite(x))
        throw NumericsError("non-finite imputation for " + series.variable_names[v] + " at row " +
                            std::to_string(t));
      csv << format_number(x);
      ++fills[v];
    }
    csv << '\n';
  }
  csv.close();

  ordered_json sidecar;
  sidecar["input"] = input;
  sidecar["checkpoint"] = ckpt_path;
  sidecar["output"] = output;
  sidecar["window"] = ckpt.meta.window;
  sidecar["config"] = model_config_to_json(ckpt.model.config());
  sidecar["fill_counts"] = ordered_json::object();
  std::size_t total = 0;
  for (std::size_t v = 0; v < fills.size(); ++v) {
    sidecar["fill_counts"][series.variable_names[v]] = fills[v];
    total += fills[v];
  }
  sidecar["total_filled"] = total;
  write_json(with_suffix(output, ".json"), sidecar);
  if (!plot.empty())
    write_text_file(plot, svg_imputation_overlay(imputed, series.values, series.mask, series.variable_names));
  out << "filled " << total << " cells -> " << output << '\n';
  return kOk;
}

int cmd_train(const CommonFlags& flags, const std::string& data, const std::string& ckpt_path,
              std::string loss_csv, std::string loss_svg, std::ostream& out) {
  RunConfig cfg = flags.resolve();
  cfg.data = data;
  cfg.validate();
  const TimeSeries series = load_csv(data);
  const auto windows = make_windows(series, cfg.window, cfg.stride);
  FittedModel fitted = fit_model(cfg.model, series, windows, cfg.train, cfg.seed);

  CheckpointMeta meta;
  meta.window = cfg.window;
  meta.variable_names = series.variable_names;
  meta.train = cfg.train;
  meta.train.seed = cfg.seed;
  meta.clusters = fitted.clusters;
  save_checkpoint(ckpt_path, fitted.model, meta);

  if (loss_csv.empty()) loss_csv = ckpt_path + ".loss.csv";
  if (loss_svg.empty()) loss_svg = ckpt_path + ".loss.svg";
  write_loss_curve_csv(loss_csv, fitted.result);
  write_text_file(loss_svg, svg_loss_curve(fitted.result));
  out << "trained " << windows.size() << " windows for " << cfg.train.epochs << " epochs";
  if (!fitted.result.curve.empty()) out << ", final loss " << format_number(fitted.result.curve.back().mean_loss);
  out << " -> " << ckpt_path << '\n';
  return kOk;
}

int cmd_benchmark(const CommonFlags& flags, const std::string& data, const std::string& out_dir,
                  bool ablation, std::ostream& out) {
  RunConfig cfg = flags.resolve();
  cfg.data = data;
  cfg.validate();
  const TimeSeries series = load_csv(data);
  BenchmarkSpec spec;
  spec.rates = cfg.mask_rates;
  spec.seeds = {cfg.seed};
  spec.train = cfg.train;
  spec.window = cfg.window;
  spec.stride = cfg.stride;
  spec.scale = cfg.metrics_scale;
  if (ablation) {
    spec.configs = ablation_grid(cfg.model);
  } else {
    spec.configs = {{"configured", cfg.model}};
  }
  const auto reports = run_benchmark(series, spec);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_report_json(dir / "report.json", reports);
  write_timings_json(dir / "timings.json", reports);
  write_summary_csv(dir / "summary.csv", reports);
  ordered_json echo;
  echo["config"] = config_echo(cfg);
  write_json(dir / "config.json", echo);
  for (const auto& r : reports)
    out << "rate " << format_number(r.mask_rate) << "  " << r.method
        << (r.config_name.empty() ? "" : "[" + r.config_name + "]") << "  mse " << format_number(r.aggregate.mse)
        << "  mae " << format_number(r.aggregate.mae) << '\n';
  return kOk;
}

int cmd_cluster_inspect(const CommonFlags& flags, const std::string& data, std::ostream& out) {
  RunConfig cfg = flags.resolve();
  cfg.data = data;
  cfg.validate();
  const TimeSeries series = load_csv(data);
  const ClusterPartition p = cluster_series(series, cfg.model.cluster_epsilon);
  ordered_json j;
  j["variables"] = series.variable_names;
  j["assignment"] = p.assignment;
  j["K"] = p.k;
  j["pi"] = p.pi;
  ordered_json groups = ordered_json::array();
  for (const auto& members : p.members()) {
    ordered_json g = ordered_json::array();
    for (std::size_t v : members) g.push_back(series.variable_names[v]);
    groups.push_back(std::move(g));
  }
  j["groups"] = std::move(groups);
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_synth(const CommonFlags& flags, const std::string& kind, const std::string& output, std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  TimeSeriesWindow w;
  if (kind == "two-distribution") {
    w = gen_two_distribution(cfg.seed);
  } else if (kind == "trend-sinusoid") {
    w = gen_trend_sinusoid(cfg.seed).window;
  } else {
    throw ConfigError("unknown synthetic dataset '" + kind + "'");
  }
  write_csv(output, w.variable_names, w.values);
  out << "wrote " << w.n_vars() << " variables x " << w.length() << " steps -> " << output << '\n';
  return kOk;
}

int cmd_grad_check(const CommonFlags& flags, std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  const GradCheckFixture fx = tiny_gradcheck_fixture(cfg.seed);
  ImputeInrModel model(fx.config, fx.input.n_vars(), fx.partition, cfg.seed);
  const GradCheckResult r = gradient_check(model, fx.input, fx.target, fx.miss);
  for (const auto& e : r.entries)
    out << e.name << "  " << e.checked << " entries  max rel err " << format_number(e.max_rel_error) << '\n';
  out << "max relative error " << format_number(r.max_rel_error) << '\n';
  return r.max_rel_error < 1e-4 ? kOk : kNumericsError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-series imputation with hypernetwork-predicted implicit neural representations"};
  app.require_subcommand(1);
  CommonFlags flags;

  std::function<int()> action;

  auto* impute = app.add_subcommand("impute", "fill the missing cells of a CSV with a trained model");
  std::string in_csv, ckpt, out_csv, plot;
  impute->add_option("input", in_csv, "input CSV")->required();
  impute->add_option("checkpoint", ckpt, "trained checkpoint")->required();
  impute->add_option("output", out_csv, "imputed CSV")->required();
  impute->add_option("--plot", plot, "write an SVG overlay of the imputation");
  impute->callback([&] { action = [&] { return cmd_impute(flags, in_csv, ckpt, out_csv, plot, out); }; });

  auto* train = app.add_subcommand("train", "train a model on a CSV and write a checkpoint");
  std::string data, loss_csv, loss_svg;
  train->add_option("data", data, "training CSV")->required();
  train->add_option("checkpoint", ckpt, "output checkpoint")->required();
  train->add_option("--loss-csv", loss_csv, "loss curve CSV (default <checkpoint>.loss.csv)");
  train->add_option("--loss-svg", loss_svg, "loss curve SVG (default <checkpoint>.loss.svg)");
  train->callback([&] { action = [&] { return cmd_train(flags, data, ckpt, loss_csv, loss_svg, out); }; });

  auto* bench = app.add_subcommand("benchmark", "mask, train, impute and score over a grid of mask rates");
  std::string out_dir = "benchmark";
  bool ablation = false;
  bench->add_option("data", data, "complete CSV")->required();
  bench->add_option("--out-dir", out_dir, "directory for report.json, timings.json, summary.csv");
  bench->add_flag("--ablation", ablation, "run all eight module on/off combinations");
  bench->callback([&] { action = [&] { return cmd_benchmark(flags, data, out_dir, ablation, out); }; });

  auto* inspect = app.add_subcommand("cluster-inspect", "print the variable clustering as JSON");
  inspect->add_option("data", data, "CSV")->required();
  inspect->callback([&] { action = [&] { return cmd_cluster_inspect(flags, data, out); }; });

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset as CSV");
  std::string kind;
  synth->add_option("kind", kind, "two-distribution or trend-sinusoid")
      ->required()
      ->check(CLI::IsMember({"two-distribution", "trend-sinusoid"}));
  synth->add_option("output", out_csv, "output CSV")->required();
  synth->callback([&] { action = [&] { return cmd_synth(flags, kind, out_csv, out); }; });

  auto* gc = app.add_subcommand("grad-check", "finite-difference check of the full model gradient");
  gc->callback([&] { action = [&] { return cmd_grad_check(flags, out); }; });

  flags.attach(app);
  for (CLI::App* sub : {impute, train, bench, inspect, synth, gc}) sub->fallthrough();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    return action();
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return kSchemaError;
  } catch (const NumericsError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericsError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace imputeinr::cli
