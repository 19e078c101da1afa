#include "imputeinr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "imputeinr/config.hpp"
#include "imputeinr/errors.hpp"

namespace imputeinr {

using nlohmann::ordered_json;

namespace {

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

ordered_json partition_json(const ClusterPartition& p) {
  return {{"assignment", p.assignment}, {"k", p.k}, {"pi", p.pi}};
}

ClusterPartition partition_from_json(const ordered_json& j) {
  ClusterPartition p;
  p.assignment = j.at("assignment").get<std::vector<std::size_t>>();
  p.k = j.at("k").get<std::size_t>();
  p.pi = j.at("pi").get<std::vector<std::size_t>>();
  try {
    p.validate();
  } catch (const ShapeError& e) {
    throw SchemaError(std::string("checkpoint partition: ") + e.what());
  }
  return p;
}

}  // namespace

std::string checkpoint_bytes(const ImputeInrModel& model, const CheckpointMeta& meta) {
  const ParameterStore& store = model.params();
  ordered_json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["config"] = model_config_to_json(model.config());
  header["train"] = train_config_to_json(meta.train);
  header["n_vars"] = model.n_vars();
  header["window"] = meta.window;
  header["variable_names"] = meta.variable_names;
  header["partition"] = partition_json(model.partition());
  header["clusters"] = partition_json(meta.clusters);
  header["parameters"] = ordered_json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Matrix& m = store.value(i);
    header["parameters"].push_back(
        {{"name", store.name(i)}, {"rows", m.rows}, {"cols", m.cols}, {"offset", offset}});
    offset += m.size();
  }
  const std::string text = header.dump();

  std::string out(kCheckpointMagic, kMagicLen);
  put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + 8 * offset);
  for (const Matrix& m : store.values())
    for (double v : m.data) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ImputeInrModel& model,
                     const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  const std::string bytes = checkpoint_bytes(model, meta);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open checkpoint " + path.string());
  return checkpoint_from_bytes(std::string(std::istreambuf_iterator<char>(in), {}));
}

LoadedCheckpoint checkpoint_from_bytes(const std::string& bytes) {
  if (bytes.size() < kMagicLen + 8 || bytes.compare(0, kMagicLen, kCheckpointMagic) != 0)
    throw SchemaError("not a checkpoint (bad magic)");
  const std::uint64_t header_len = get_u64(bytes, kMagicLen);
  const std::size_t body = kMagicLen + 8;
  if (header_len > bytes.size() - body) throw SchemaError("truncated checkpoint header");

  ordered_json header;
  try {
    header = ordered_json::parse(bytes.substr(body, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint header: ") + e.what());
  }
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion)
      throw SchemaError("checkpoint format version " + std::to_string(version) + ", expected " +
                        std::to_string(kCheckpointFormatVersion));
    const ModelConfig cfg = model_config_from_json(header.at("config"));
    CheckpointMeta meta;
    meta.window = header.at("window").get<std::size_t>();
    meta.variable_names = header.at("variable_names").get<std::vector<std::string>>();
    const auto& tj = header.at("train");
    meta.train.lr = tj.at("lr").get<double>();
    meta.train.beta1 = tj.at("beta1").get<double>();
    meta.train.beta2 = tj.at("beta2").get<double>();
    meta.train.eps = tj.at("adam_eps").get<double>();
    meta.train.epochs = tj.at("epochs").get<std::size_t>();
    meta.train.batch_size = tj.at("batch_size").get<std::size_t>();
    meta.train.seed = tj.at("seed").get<std::uint64_t>();
    meta.train.mask_rate = tj.at("train_mask_rate").get<double>();
    meta.train.grad_clip = tj.at("grad_clip").get<double>();
    meta.clusters = partition_from_json(header.at("clusters"));
    const std::size_t n_vars = header.at("n_vars").get<std::size_t>();
    ClusterPartition partition = partition_from_json(header.at("partition"));
    if (partition.n_vars() != n_vars || meta.variable_names.size() != n_vars)
      throw SchemaError("checkpoint variable count mismatch");

    ImputeInrModel model(cfg, n_vars, std::move(partition), 0);
    ParameterStore& store = model.params();
    const auto& table = header.at("parameters");
    if (table.size() != store.size())
      throw SchemaError("checkpoint has " + std::to_string(table.size()) + " parameters, model expects " +
                        std::to_string(store.size()));
    const std::size_t data_start = body + header_len;
    const std::size_t n_values = (bytes.size() - data_start) / 8;
    if ((bytes.size() - data_start) % 8 != 0 || n_values != store.total_len())
      throw SchemaError("checkpoint weight payload has the wrong length");
    std::size_t offset = 0;
    for (std::size_t i = 0; i < store.size(); ++i) {
      const auto& e = table[i];
      Matrix& m = store.value(i);
      if (e.at("name").get<std::string>() != store.name(i) || e.at("rows").get<std::size_t>() != m.rows ||
          e.at("cols").get<std::size_t>() != m.cols || e.at("offset").get<std::size_t>() != offset)
        throw SchemaError("checkpoint parameter " + std::to_string(i) + " does not match the model layout");
      for (double& v : m.data) {
        v = std::bit_cast<double>(get_u64(bytes, data_start + 8 * offset));
        ++offset;
      }
    }
    return {std::move(model), std::move(meta)};
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("checkpoint config: ") + e.what());
  } catch (const ShapeError& e) {
    throw SchemaError(std::string("checkpoint config: ") + e.what());
  }
}

}  // namespace imputeinr
