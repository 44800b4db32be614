#include "mlsent/backend.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include "mlsent/checkpoint.hpp"
#include "mlsent/encoder.hpp"
#include "mlsent/error.hpp"
#include "mlsent/random.hpp"
#include "mlsent/unicode.hpp"

namespace mlsent {
namespace fs = std::filesystem;

ClassifierProbe::ClassifierProbe(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {
  if (!fn_) throw ArgumentError("probe function is empty");
}

std::vector<ProbaRow> ClassifierProbe::predict_proba(std::span<const std::string> batch) const {
  std::vector<ProbaRow> rows = fn_(batch);
  if (rows.size() != batch.size()) {
    throw ProbeError(name_ + ": returned " + std::to_string(rows.size()) + " rows for a batch of " +
                     std::to_string(batch.size()));
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double sum = 0.0;
    for (double v : rows[r]) {
      if (!std::isfinite(v) || v < 0.0) throw ProbeError(name_ + ": invalid probability in row " + std::to_string(r));
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw ProbeError(name_ + ": row " + std::to_string(r) + " sums to " + std::to_string(sum));
    }
  }
  return rows;
}

ProbaRow ClassifierProbe::predict_one(const std::string& text) const {
  return predict_proba(std::span<const std::string>(&text, 1)).front();
}

std::size_t argmax(const ProbaRow& row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

ProbaRow softmax(const ProbaRow& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  ProbaRow out{};
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

ClassifierProbe lexicon_probe(const std::set<std::string>& positive_words,
                              const std::set<std::string>& negative_words, const ProbaRow& bias,
                              double scale) {
  std::set<std::string> pos;
  std::set<std::string> neg;
  for (const auto& w : positive_words) pos.insert(unicode::fold_case(w));
  for (const auto& w : negative_words) neg.insert(unicode::fold_case(w));
  for (const auto& w : pos) {
    if (neg.contains(w)) throw ArgumentError("word \"" + w + "\" is in both lexicons");
  }
  return ClassifierProbe("lexicon", [pos, neg, bias, scale](std::span<const std::string> batch) {
    std::vector<ProbaRow> rows;
    rows.reserve(batch.size());
    for (const auto& text : batch) {
      const std::string folded = unicode::fold_case(text);
      double hits_pos = 0.0;
      double hits_neg = 0.0;
      for (const auto& span : unicode::split_units(folded)) {
        const std::string unit = folded.substr(span.begin, span.size());
        if (pos.contains(unit)) hits_pos += 1.0;
        if (neg.contains(unit)) hits_neg += 1.0;
      }
      rows.push_back(softmax({bias[0] + scale * hits_pos, bias[1], bias[2] + scale * hits_neg}));
    }
    return rows;
  });
}

ClassifierProbe with_cleaning(ClassifierProbe inner, CleanConfig config) {
  const std::string name = inner.name() + "+clean";
  return ClassifierProbe(name, [inner = std::move(inner), config = std::move(config)](
                                   std::span<const std::string> batch) {
    std::vector<std::string> cleaned;
    cleaned.reserve(batch.size());
    for (const auto& t : batch) cleaned.push_back(clean(t, config));
    return inner.predict_proba(cleaned);
  });
}

std::vector<ParamGroup> parameter_groups(const EncoderArch& arch) {
  const encoder::Layout lay = encoder::layout(arch);
  std::vector<ParamGroup> groups;
  const std::size_t first_layer = lay.layers.empty() ? lay.head_weight : lay.layers.front().wq;
  groups.push_back({"embeddings", 0, first_layer, true});
  for (std::size_t l = 0; l < lay.layers.size(); ++l) {
    const std::size_t begin = lay.layers[l].wq;
    const std::size_t end = l + 1 < lay.layers.size() ? lay.layers[l + 1].wq : lay.head_weight;
    groups.push_back({"layer." + std::to_string(l), begin, end - begin, true});
  }
  groups.push_back({"head", lay.head_weight, lay.total - lay.head_weight, true});
  return groups;
}

TrainableModel::TrainableModel(std::string backend_id, EncoderArch arch)
    : backend_id_(std::move(backend_id)), arch_(arch) {
  if (arch_.hidden == 0 || arch_.ffn == 0 || arch_.vocab_size <= HashTokenizer::kReserved ||
      arch_.max_positions == 0) {
    throw ArgumentError("degenerate encoder architecture");
  }
  if (arch_.num_labels != kNumLabels) {
    throw ArgumentError("num_labels must be " + std::to_string(kNumLabels));
  }
  groups_ = parameter_groups(arch_);
  params_.assign(encoder::layout(arch_).total, 0.0);
}

const ParamGroup& TrainableModel::group(std::string_view name) const {
  for (const auto& g : groups_) {
    if (g.name == name) return g;
  }
  throw ArgumentError("no parameter group named " + std::string(name));
}

std::span<double> TrainableModel::group_params(std::string_view name) {
  const ParamGroup& g = group(name);
  return std::span<double>(params_).subspan(g.offset, g.size);
}

std::span<const double> TrainableModel::group_params(std::string_view name) const {
  const ParamGroup& g = group(name);
  return std::span<const double>(params_).subspan(g.offset, g.size);
}

std::size_t TrainableModel::trainable_param_count() const {
  std::size_t n = 0;
  for (const auto& g : groups_) {
    if (g.trainable) n += g.size;
  }
  return n;
}

void TrainableModel::initialize(std::uint64_t seed) {
  const encoder::Layout lay = encoder::layout(arch_);
  Rng rng(seed);
  std::fill(params_.begin(), params_.end(), 0.0);
  auto fill_normal = [&](std::size_t offset, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) params_[offset + i] = rng.normal(0.0, 0.02);
  };
  const std::size_t d = arch_.hidden;
  const std::size_t f = arch_.ffn;
  fill_normal(lay.token_embeddings, arch_.vocab_size * d);
  fill_normal(lay.position_embeddings, arch_.max_positions * d);
  for (const auto& o : lay.layers) {
    fill_normal(o.wq, d * d);
    fill_normal(o.wk, d * d);
    fill_normal(o.wv, d * d);
    fill_normal(o.wo, d * d);
    fill_normal(o.w1, f * d);
    fill_normal(o.w2, d * f);
  }
  fill_normal(lay.head_weight, arch_.num_labels * d);
}

FreezePlan FreezePlan::first_n(std::size_t total_layers, std::size_t n) {
  if (n > total_layers) throw ArgumentError("cannot freeze more layers than the model has");
  FreezePlan plan;
  plan.total_layers = total_layers;
  for (std::size_t i = 0; i < n; ++i) plan.frozen_layer_indices.insert(i);
  plan.freeze_embeddings = n > 0;
  return plan;
}

FreezePlan FreezePlan::none(std::size_t total_layers) {
  FreezePlan plan;
  plan.total_layers = total_layers;
  return plan;
}

namespace {

std::size_t parse_index(std::string_view s, std::string_view spec) {
  std::size_t value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    throw ArgumentError("bad layer index \"" + std::string(s) + "\" in freeze spec \"" + std::string(spec) + "\"");
  }
  return value;
}

bool parse_on_off(std::string_view v, std::string_view spec) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ArgumentError("expected on/off in freeze spec \"" + std::string(spec) + "\"");
}

}  // namespace

FreezePlan FreezePlan::parse(std::string_view spec, std::size_t total_layers) {
  if (spec == "none") return none(total_layers);
  if (spec.starts_with("first")) {
    return first_n(total_layers, parse_index(spec.substr(5), spec));
  }
  if (!spec.starts_with("custom:")) {
    throw ArgumentError("unknown freeze spec \"" + std::string(spec) + "\" (first8|none|custom:<ranges>)");
  }
  FreezePlan plan;
  plan.total_layers = total_layers;
  std::string_view body = spec.substr(7);
  std::optional<bool> embeddings;
  std::string_view ranges = body;
  if (const auto semi = body.find(';'); semi != std::string_view::npos) {
    ranges = body.substr(0, semi);
    std::string_view opts = body.substr(semi + 1);
    while (!opts.empty()) {
      const auto next = opts.find(';');
      const std::string_view opt = opts.substr(0, next);
      const auto eq = opt.find('=');
      if (eq == std::string_view::npos) throw ArgumentError("bad option in freeze spec \"" + std::string(spec) + "\"");
      const std::string_view key = opt.substr(0, eq);
      const bool value = parse_on_off(opt.substr(eq + 1), spec);
      if (key == "embeddings") {
        embeddings = value;
      } else if (key == "head") {
        plan.freeze_head = value;
      } else {
        throw ArgumentError("unknown option \"" + std::string(key) + "\" in freeze spec");
      }
      opts = next == std::string_view::npos ? std::string_view{} : opts.substr(next + 1);
    }
  }
  while (!ranges.empty()) {
    const auto comma = ranges.find(',');
    const std::string_view item = ranges.substr(0, comma);
    if (const auto dash = item.find('-'); dash != std::string_view::npos) {
      const std::size_t lo = parse_index(item.substr(0, dash), spec);
      const std::size_t hi = parse_index(item.substr(dash + 1), spec);
      if (hi < lo) throw ArgumentError("descending range in freeze spec \"" + std::string(spec) + "\"");
      for (std::size_t i = lo; i <= hi; ++i) plan.frozen_layer_indices.insert(i);
    } else if (!item.empty()) {
      plan.frozen_layer_indices.insert(parse_index(item, spec));
    }
    ranges = comma == std::string_view::npos ? std::string_view{} : ranges.substr(comma + 1);
  }
  plan.freeze_embeddings = embeddings.value_or(plan.frozen_layer_indices.contains(0));
  plan.validate();
  return plan;
}

std::string FreezePlan::describe() const {
  std::ostringstream os;
  os << "frozen layers {";
  bool first = true;
  for (std::size_t i : frozen_layer_indices) {
    os << (first ? "" : ",") << i;
    first = false;
  }
  os << "} of " << total_layers << ", embeddings " << (freeze_embeddings ? "frozen" : "trainable")
     << ", head " << (freeze_head ? "frozen" : "trainable");
  return os.str();
}

std::string FreezePlan::to_spec() const {
  if (!freeze_head) {
    if (*this == none(total_layers)) return "none";
    const std::size_t n = frozen_layer_indices.size();
    if (n > 0 && *this == first_n(total_layers, n)) return "first" + std::to_string(n);
  }
  std::string out = "custom:";
  bool first = true;
  for (std::size_t i : frozen_layer_indices) {
    out += (first ? "" : ",") + std::to_string(i);
    first = false;
  }
  out += std::string(";embeddings=") + (freeze_embeddings ? "on" : "off");
  out += std::string(";head=") + (freeze_head ? "on" : "off");
  return out;
}

void FreezePlan::validate() const {
  for (std::size_t i : frozen_layer_indices) {
    if (i >= total_layers) {
      throw ArgumentError("frozen layer index " + std::to_string(i) + " outside [0, " +
                          std::to_string(total_layers) + ")");
    }
  }
}

FreezeSummary apply_freeze_plan(TrainableModel& model, const FreezePlan& plan) {
  plan.validate();
  if (plan.total_layers != model.arch().layers) {
    throw ArgumentError("freeze plan expects " + std::to_string(plan.total_layers) +
                        " layers, model has " + std::to_string(model.arch().layers));
  }
  FreezeSummary summary;
  for (auto& g : model.mutable_groups()) {
    if (g.name == "embeddings") {
      g.trainable = !plan.freeze_embeddings;
    } else if (g.name == "head") {
      g.trainable = !plan.freeze_head;
    } else {
      const std::size_t idx = std::stoul(g.name.substr(6));
      g.trainable = !plan.frozen_layer_indices.contains(idx);
    }
    (g.trainable ? summary.trainable_param_count : summary.frozen_param_count) += g.size;
  }
  return summary;
}

FreezeSummary count_freeze(const EncoderArch& arch, const FreezePlan& plan) {
  plan.validate();
  if (plan.total_layers != arch.layers) throw ArgumentError("freeze plan depth does not match architecture");
  FreezeSummary summary;
  for (const auto& g : parameter_groups(arch)) {
    bool frozen = false;
    if (g.name == "embeddings") {
      frozen = plan.freeze_embeddings;
    } else if (g.name == "head") {
      frozen = plan.freeze_head;
    } else {
      frozen = plan.frozen_layer_indices.contains(std::stoul(g.name.substr(6)));
    }
    (frozen ? summary.frozen_param_count : summary.trainable_param_count) += g.size;
  }
  return summary;
}

namespace {

const std::map<std::string, EncoderArch, std::less<>>& known_backends() {
  static const std::map<std::string, EncoderArch, std::less<>> table = {
      {"bert-base-multilingual-cased", {119547, 768, 3072, 12, 512, kNumLabels}},
      {"roberta-base", {50265, 768, 3072, 12, 514, kNumLabels}},
      {"xlm-roberta-base", {250002, 768, 3072, 12, 514, kNumLabels}},
  };
  return table;
}

constexpr std::string_view kTinyPrefix = "tiny-encoder";

EncoderArch parse_tiny(std::string_view id) {
  EncoderArch arch;  // defaults: 12 layers, hidden 16
  std::string_view opts = id.substr(kTinyPrefix.size());
  if (opts.empty()) return arch;
  if (opts.front() != ':') throw LoadError("unresolvable backend id \"" + std::string(id) + "\"");
  opts.remove_prefix(1);
  while (!opts.empty()) {
    const auto comma = opts.find(',');
    const std::string_view kv = opts.substr(0, comma);
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw ArgumentError("bad tiny-encoder option \"" + std::string(kv) + "\"");
    const std::string_view key = kv.substr(0, eq);
    const std::size_t value = parse_index(kv.substr(eq + 1), id);
    if (key == "layers") arch.layers = value;
    else if (key == "hidden") arch.hidden = value;
    else if (key == "ffn") arch.ffn = value;
    else if (key == "vocab") arch.vocab_size = value;
    else if (key == "positions") arch.max_positions = value;
    else throw ArgumentError("unknown tiny-encoder option \"" + std::string(key) + "\"");
    opts = comma == std::string_view::npos ? std::string_view{} : opts.substr(comma + 1);
  }
  return arch;
}

}  // namespace

std::optional<EncoderArch> describe_backend(std::string_view backend_id) {
  if (auto it = known_backends().find(backend_id); it != known_backends().end()) return it->second;
  if (backend_id.starts_with(kTinyPrefix)) return parse_tiny(backend_id);
  return std::nullopt;
}

bool is_reference_backend(std::string_view backend_id) { return known_backends().contains(backend_id); }

std::string model_cache_dir() {
  if (const char* dir = std::getenv("MLSENT_CACHE_DIR"); dir && *dir) return dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return (fs::path(xdg) / "mlsent").string();
  if (const char* home = std::getenv("HOME"); home && *home) return (fs::path(home) / ".cache" / "mlsent").string();
  return ".mlsent-cache";
}

TrainableModel load_encoder_backend(const std::string& backend_id, std::size_t num_labels,
                                    std::uint64_t init_seed) {
  if (num_labels != kNumLabels) {
    throw ArgumentError("num_labels must be 3, got " + std::to_string(num_labels));
  }
  if (looks_like_model_dir(backend_id)) return load_model(backend_id).model;

  if (backend_id.starts_with(kTinyPrefix)) {
    TrainableModel model(backend_id, parse_tiny(backend_id));
    model.initialize(init_seed);
    return model;
  }

  if (auto it = known_backends().find(backend_id); it != known_backends().end()) {
    const fs::path dir = fs::path(model_cache_dir()) / backend_id;
    if (!looks_like_model_dir(dir)) {
      throw LoadError("backend \"" + backend_id + "\" has no converted checkpoint in " + dir.string() +
                      " (set MLSENT_CACHE_DIR to point at converted weights)");
    }
    LoadedModel loaded = load_model(dir);
    if (loaded.model.arch().layers != it->second.layers) {
      throw CapabilityError("backend \"" + backend_id + "\" should have " +
                            std::to_string(it->second.layers) + " layers, checkpoint has " +
                            std::to_string(loaded.model.arch().layers));
    }
    return std::move(loaded.model);
  }
  throw LoadError("unresolvable backend id \"" + backend_id + "\"");
}

ClassifierProbe probe_from_model(const TrainableModel& model, const TokenizerSettings& settings) {
  if (settings.vocab_size != 0 && settings.vocab_size != model.arch().vocab_size) {
    throw CapabilityError("tokenizer vocabulary (" + std::to_string(settings.vocab_size) +
                          ") does not match model vocabulary (" +
                          std::to_string(model.arch().vocab_size) + ")");
  }
  if (settings.max_length > model.arch().max_positions) {
    throw CapabilityError("max_length " + std::to_string(settings.max_length) +
                          " exceeds the model's " + std::to_string(model.arch().max_positions) +
                          " positions");
  }
  auto snapshot = std::make_shared<const TrainableModel>(model);
  auto tokenizer = std::make_shared<const HashTokenizer>(model.arch().vocab_size, settings);
  return ClassifierProbe(model.backend_id(), [snapshot, tokenizer](std::span<const std::string> batch) {
    std::vector<ProbaRow> rows;
    rows.reserve(batch.size());
    for (const auto& text : batch) {
      const Encoding enc = tokenizer->encode(text);
      rows.push_back(softmax(encoder::logits(
          *snapshot, std::span<const std::int32_t>(enc.ids.data(), enc.length))));
    }
    return rows;
  });
}

}  // namespace mlsent
