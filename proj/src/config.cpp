#include "imputeinr/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "imputeinr/errors.hpp"

namespace imputeinr {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError("invalid value '" + text + "' for " + key);
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw ConfigError("invalid boolean '" + text + "' for " + key);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string boolean(bool v) { return v ? "true" : "false"; }

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "kernel_sizes",  "channels_per_scale", "patch_len",    "d_model",         "n_blocks",
      "n_heads",       "ff_mult",            "trend_degree", "n_freqs",         "inr_hidden",
      "global_layers", "group_layers",       "omega0",       "activation",      "multi_scale",
      "clustering",    "grouping",           "cluster_epsilon", "lr",           "beta1",
      "beta2",         "adam_eps",           "epochs",       "batch_size",      "train_mask_rate",
      "grad_clip",     "seed",               "window",       "stride",          "mask_rates",
      "metrics_scale", "data",               "checkpoint",   "output"};
  return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto& m = cfg.model;
  auto& t = cfg.train;
  const auto size = [&](std::size_t& dst) { dst = parse_number<std::size_t>(key, value); };
  const auto real = [&](double& dst) { dst = parse_number<double>(key, value); };

  if (key == "kernel_sizes") {
    m.encoder.kernel_sizes.clear();
    for (const auto& k : split_list(value)) m.encoder.kernel_sizes.push_back(parse_number<std::size_t>(key, k));
  } else if (key == "channels_per_scale") size(m.encoder.channels_per_scale);
  else if (key == "patch_len") size(m.encoder.patch_len);
  else if (key == "d_model") size(m.encoder.d_model);
  else if (key == "n_blocks") size(m.hypernet.n_blocks);
  else if (key == "n_heads") size(m.hypernet.n_heads);
  else if (key == "ff_mult") size(m.hypernet.ff_mult);
  else if (key == "trend_degree") size(m.inr.trend_degree);
  else if (key == "n_freqs") size(m.inr.n_freqs);
  else if (key == "inr_hidden") size(m.inr.hidden);
  else if (key == "global_layers") size(m.inr.global_layers);
  else if (key == "group_layers") size(m.inr.group_layers);
  else if (key == "omega0") real(m.inr.omega0);
  else if (key == "activation") {
    if (value == "sine") m.inr.activation = Activation::Sine;
    else if (value == "relu") m.inr.activation = Activation::Relu;
    else throw ConfigError("activation must be 'sine' or 'relu', got '" + value + "'");
  } else if (key == "multi_scale") m.flags.multi_scale = parse_bool(key, value);
  else if (key == "clustering") m.flags.clustering = parse_bool(key, value);
  else if (key == "grouping") m.flags.grouping = parse_bool(key, value);
  else if (key == "cluster_epsilon") real(m.cluster_epsilon);
  else if (key == "lr") real(t.lr);
  else if (key == "beta1") real(t.beta1);
  else if (key == "beta2") real(t.beta2);
  else if (key == "adam_eps") real(t.eps);
  else if (key == "epochs") size(t.epochs);
  else if (key == "batch_size") size(t.batch_size);
  else if (key == "train_mask_rate") real(t.mask_rate);
  else if (key == "grad_clip") real(t.grad_clip);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "window") size(cfg.window);
  else if (key == "stride") size(cfg.stride);
  else if (key == "mask_rates") {
    cfg.mask_rates.clear();
    for (const auto& r : split_list(value)) cfg.mask_rates.push_back(parse_number<double>(key, r));
  } else if (key == "metrics_scale") cfg.metrics_scale = parse_metrics_scale(value);
  else if (key == "data") cfg.data = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "output") cfg.output = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    apply_setting(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
}

RunConfig layered_config(const std::filesystem::path& file,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg;
  if (!file.empty()) apply_config_file(cfg, file);
  for (const auto& [key, value] : overrides) apply_setting(cfg, key, value);
  return cfg;
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
  const auto& m = cfg.model;
  const auto& t = cfg.train;
  std::vector<std::string> kernels;
  for (auto k : m.encoder.kernel_sizes) kernels.push_back(num(k));
  std::vector<std::string> rates;
  for (double r : cfg.mask_rates) rates.push_back(num(r));
  return {{"kernel_sizes", join(kernels)},
          {"channels_per_scale", num(m.encoder.channels_per_scale)},
          {"patch_len", num(m.encoder.patch_len)},
          {"d_model", num(m.encoder.d_model)},
          {"n_blocks", num(m.hypernet.n_blocks)},
          {"n_heads", num(m.hypernet.n_heads)},
          {"ff_mult", num(m.hypernet.ff_mult)},
          {"trend_degree", num(m.inr.trend_degree)},
          {"n_freqs", num(m.inr.n_freqs)},
          {"inr_hidden", num(m.inr.hidden)},
          {"global_layers", num(m.inr.global_layers)},
          {"group_layers", num(m.inr.group_layers)},
          {"omega0", num(m.inr.omega0)},
          {"activation", m.inr.activation == Activation::Sine ? "sine" : "relu"},
          {"multi_scale", boolean(m.flags.multi_scale)},
          {"clustering", boolean(m.flags.clustering)},
          {"grouping", boolean(m.flags.grouping)},
          {"cluster_epsilon", num(m.cluster_epsilon)},
          {"lr", num(t.lr)},
          {"beta1", num(t.beta1)},
          {"beta2", num(t.beta2)},
          {"adam_eps", num(t.eps)},
          {"epochs", num(t.epochs)},
          {"batch_size", num(t.batch_size)},
          {"train_mask_rate", num(t.mask_rate)},
          {"grad_clip", num(t.grad_clip)},
          {"seed", std::to_string(cfg.seed)},
          {"window", num(cfg.window)},
          {"stride", num(cfg.stride)},
          {"mask_rates", join(rates)},
          {"metrics_scale", to_string(cfg.metrics_scale)},
          {"data", cfg.data.string()},
          {"checkpoint", cfg.checkpoint.string()},
          {"output", cfg.output.string()}};
}

void RunConfig::validate() const {
  model.encoder.validate(window);
  train.validate();
  if (model.hypernet.n_blocks == 0 || model.hypernet.n_heads == 0 ||
      model.encoder.d_model % model.hypernet.n_heads != 0)
    throw ConfigError("d_model must be a positive multiple of n_heads");
  if (model.inr.global_layers == 0 || model.inr.group_layers == 0 || model.inr.hidden == 0)
    throw ConfigError("the residual MLP needs at least one global and one group layer");
  if (!(model.cluster_epsilon > 0.0)) throw ConfigError("cluster_epsilon must be positive");
  if (window == 0 || stride == 0) throw ConfigError("window and stride must be positive");
  if (mask_rates.empty()) throw ConfigError("mask_rates must not be empty");
  for (double r : mask_rates)
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("mask rates must lie in (0, 1)");
  if (!data.empty() && !std::filesystem::exists(data))
    throw ConfigError("data file " + data.string() + " does not exist");
  if (!checkpoint.empty() && !std::filesystem::exists(checkpoint))
    throw ConfigError("checkpoint " + checkpoint.string() + " does not exist");
}

nlohmann::ordered_json model_config_to_json(const ModelConfig& cfg) {
  return {{"kernel_sizes", cfg.encoder.kernel_sizes},
          {"channels_per_scale", cfg.encoder.channels_per_scale},
          {"patch_len", cfg.encoder.patch_len},
          {"d_model", cfg.encoder.d_model},
          {"n_blocks", cfg.hypernet.n_blocks},
          {"n_heads", cfg.hypernet.n_heads},
          {"ff_mult", cfg.hypernet.ff_mult},
          {"trend_degree", cfg.inr.trend_degree},
          {"n_freqs", cfg.inr.n_freqs},
          {"inr_hidden", cfg.inr.hidden},
          {"global_layers", cfg.inr.global_layers},
          {"group_layers", cfg.inr.group_layers},
          {"omega0", cfg.inr.omega0},
          {"activation", cfg.inr.activation == Activation::Sine ? "sine" : "relu"},
          {"multi_scale", cfg.flags.multi_scale},
          {"clustering", cfg.flags.clustering},
          {"grouping", cfg.flags.grouping},
          {"cluster_epsilon", cfg.cluster_epsilon}};
}

ModelConfig model_config_from_json(const nlohmann::ordered_json& j) {
  try {
    ModelConfig cfg;
    cfg.encoder.kernel_sizes = j.at("kernel_sizes").get<std::vector<std::size_t>>();
    cfg.encoder.channels_per_scale = j.at("channels_per_scale").get<std::size_t>();
    cfg.encoder.patch_len = j.at("patch_len").get<std::size_t>();
    cfg.encoder.d_model = j.at("d_model").get<std::size_t>();
    cfg.hypernet.n_blocks = j.at("n_blocks").get<std::size_t>();
    cfg.hypernet.n_heads = j.at("n_heads").get<std::size_t>();
    cfg.hypernet.ff_mult = j.at("ff_mult").get<std::size_t>();
    cfg.inr.trend_degree = j.at("trend_degree").get<std::size_t>();
    cfg.inr.n_freqs = j.at("n_freqs").get<std::size_t>();
    cfg.inr.hidden = j.at("inr_hidden").get<std::size_t>();
    cfg.inr.global_layers = j.at("global_layers").get<std::size_t>();
    cfg.inr.group_layers = j.at("group_layers").get<std::size_t>();
    cfg.inr.omega0 = j.at("omega0").get<double>();
    const auto act = j.at("activation").get<std::string>();
    if (act != "sine" && act != "relu") throw SchemaError("unknown activation '" + act + "'");
    cfg.inr.activation = act == "sine" ? Activation::Sine : Activation::Relu;
    cfg.flags.multi_scale = j.at("multi_scale").get<bool>();
    cfg.flags.clustering = j.at("clustering").get<bool>();
    cfg.flags.grouping = j.at("grouping").get<bool>();
    cfg.cluster_epsilon = j.at("cluster_epsilon").get<double>();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model config: ") + e.what());
  }
}

nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg) {
  return {{"lr", cfg.lr},
          {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},
          {"adam_eps", cfg.eps},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"train_mask_rate", cfg.mask_rate},
          {"grad_clip", cfg.grad_clip}};
}

}  // namespace imputeinr
