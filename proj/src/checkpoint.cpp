#include "mlsent/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mlsent/error.hpp"

namespace mlsent {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'M', 'L', 'S', 'E', 'N', 'T', 'W', '1'};
constexpr const char* kConfigFile = "config.json";
constexpr const char* kWeightsFile = "weights.bin";
constexpr const char* kFreezeFile = "freeze_plan.json";

static_assert(std::endian::native == std::endian::little, "weights are stored little-endian");

std::uint64_t fnv1a(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointError("corrupt " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

}  // namespace

void write_doubles(const fs::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint64_t count = values.size();
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  const std::uint64_t checksum = fnv1a(bytes, values.size_bytes());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(values.size_bytes()));
  out.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

std::vector<double> read_doubles(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  char magic[8];
  std::uint64_t count = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("bad header in " + path.string());
  }
  const auto size = fs::file_size(path);
  if (size != sizeof kMagic + 2 * sizeof(std::uint64_t) + count * sizeof(double)) {
    throw CheckpointError("truncated or oversized " + path.string());
  }
  std::vector<double> values(count);
  std::uint64_t checksum = 0;
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  in.read(reinterpret_cast<char*>(&checksum), sizeof checksum);
  if (!in) throw CheckpointError("short read in " + path.string());
  if (checksum != fnv1a(reinterpret_cast<const unsigned char*>(values.data()), count * sizeof(double))) {
    throw CheckpointError("checksum mismatch in " + path.string());
  }
  return values;
}

void save_model(const TrainableModel& model, const TokenizerSettings& tokenizer, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const EncoderArch& a = model.arch();
  json cfg;
  cfg["format"] = "mlsent-encoder";
  cfg["version"] = 1;
  cfg["backend_id"] = model.backend_id();
  cfg["arch"] = {{"vocab_size", a.vocab_size}, {"hidden", a.hidden},       {"ffn", a.ffn},
                 {"layers", a.layers},         {"max_positions", a.max_positions},
                 {"num_labels", a.num_labels}};
  cfg["class_order"] = {"positive", "neutral", "negative"};
  cfg["groups"] = json::array();
  for (const auto& g : model.groups()) {
    cfg["groups"].push_back({{"name", g.name}, {"offset", g.offset}, {"size", g.size}, {"trainable", g.trainable}});
  }
  cfg["tokenizer"] = {{"max_length", tokenizer.max_length},
                      {"padding", "max_length"},
                      {"truncation", tokenizer.truncation},
                      {"vocab_size", a.vocab_size}};
  write_json(dir / kConfigFile, cfg);
  write_doubles(dir / kWeightsFile, model.params());
}

bool looks_like_model_dir(const fs::path& dir) {
  std::error_code ec;
  return fs::is_directory(dir, ec) && fs::exists(dir / kConfigFile, ec) && fs::exists(dir / kWeightsFile, ec);
}

LoadedModel load_model(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw LoadError("no model directory at " + dir.string());
  const json cfg = read_json(dir / kConfigFile);
  EncoderArch arch;
  std::vector<ParamGroup> groups;
  TokenizerSettings tok;
  std::string backend_id;
  try {
    if (cfg.value("format", "") != "mlsent-encoder") throw CapabilityError("unsupported model format in " + dir.string());
    backend_id = cfg.at("backend_id").get<std::string>();
    const json& a = cfg.at("arch");
    arch.vocab_size = a.at("vocab_size").get<std::size_t>();
    arch.hidden = a.at("hidden").get<std::size_t>();
    arch.ffn = a.at("ffn").get<std::size_t>();
    arch.layers = a.at("layers").get<std::size_t>();
    arch.max_positions = a.at("max_positions").get<std::size_t>();
    arch.num_labels = a.at("num_labels").get<std::size_t>();
    if (!cfg.contains("groups")) throw CapabilityError("model config has no parameter groups");
    for (const auto& g : cfg.at("groups")) {
      groups.push_back({g.at("name").get<std::string>(), g.at("offset").get<std::size_t>(),
                        g.at("size").get<std::size_t>(), g.value("trainable", true)});
    }
    const json& t = cfg.at("tokenizer");
    tok.max_length = t.at("max_length").get<std::size_t>();
    tok.truncation = t.value("truncation", true);
    tok.vocab_size = t.value("vocab_size", std::size_t{0});
  } catch (const json::exception& e) {
    throw CheckpointError("malformed model config in " + dir.string() + ": " + e.what());
  }

  TrainableModel model(backend_id, arch);
  // Every layer must be identifiable by name with the expected extent.
  const auto expected = model.groups();
  if (groups.size() != expected.size()) {
    throw CapabilityError("checkpoint does not expose per-layer parameter groups");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (groups[i].name != expected[i].name || groups[i].offset != expected[i].offset ||
        groups[i].size != expected[i].size) {
      throw CapabilityError("unexpected parameter group \"" + groups[i].name + "\" in " + dir.string());
    }
    model.mutable_groups()[i].trainable = groups[i].trainable;
  }
  const std::vector<double> weights = read_doubles(dir / kWeightsFile);
  if (weights.size() != model.total_param_count()) {
    throw CheckpointError("weights file holds " + std::to_string(weights.size()) +
                          " values, architecture needs " + std::to_string(model.total_param_count()));
  }
  std::copy(weights.begin(), weights.end(), model.params().begin());
  return {std::move(model), tok};
}

void save_freeze_plan(const FreezePlan& plan, const FreezeSummary& summary, const fs::path& dir) {
  json doc;
  doc["total_layers"] = plan.total_layers;
  doc["frozen_layer_indices"] = plan.frozen_layer_indices;
  doc["freeze_embeddings"] = plan.freeze_embeddings;
  doc["freeze_head"] = plan.freeze_head;
  doc["frozen_param_count"] = summary.frozen_param_count;
  doc["trainable_param_count"] = summary.trainable_param_count;
  write_json(dir / kFreezeFile, doc);
}

std::optional<FreezePlan> load_freeze_plan(const fs::path& dir) {
  if (!fs::exists(dir / kFreezeFile)) return std::nullopt;
  std::ifstream in(dir / kFreezeFile);
  try {
    const json doc = json::parse(in);
    FreezePlan plan;
    plan.total_layers = doc.at("total_layers").get<std::size_t>();
    plan.frozen_layer_indices = doc.at("frozen_layer_indices").get<std::set<std::size_t>>();
    plan.freeze_embeddings = doc.at("freeze_embeddings").get<bool>();
    plan.freeze_head = doc.value("freeze_head", false);
    plan.validate();
    return plan;
  } catch (const json::exception& e) {
    throw CheckpointError("corrupt freeze_plan.json in " + dir.string() + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw CheckpointError("invalid freeze plan in " + dir.string() + ": " + e.what());
  }
}

}  // namespace mlsent
