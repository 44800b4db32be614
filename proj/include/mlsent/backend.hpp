#pragma once

// Classification backends: the black-box probe interface consumed by metrics
// and explanations, a lexicon oracle for tests, and the trainable encoder with
// its layer-freezing machinery.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlsent/labels.hpp"
#include "mlsent/textclean.hpp"
#include "mlsent/tokenizer.hpp"

namespace mlsent {

using ProbaRow = std::array<double, kNumLabels>;

// Batch of texts -> one probability row per text, in the pinned class order.
class ClassifierProbe {
 public:
  using Fn = std::function<std::vector<ProbaRow>(std::span<const std::string>)>;

  ClassifierProbe(std::string name, Fn fn);

  const std::string& name() const { return name_; }
  // Checks every row: finite, non-negative, sums to 1 within 1e-6.
  std::vector<ProbaRow> predict_proba(std::span<const std::string> batch) const;
  ProbaRow predict_one(const std::string& text) const;

 private:
  std::string name_;
  Fn fn_;
};

inline constexpr double kRowSumTolerance = 1e-6;

// Lowest index wins ties.
std::size_t argmax(const ProbaRow& row);
ProbaRow softmax(const ProbaRow& logits);

// logits = bias + scale * (positive hits, 0, negative hits); units are the
// case-folded interpretable tokens of the text.
ClassifierProbe lexicon_probe(const std::set<std::string>& positive_words,
                              const std::set<std::string>& negative_words,
                              const ProbaRow& bias = {0.0, 0.0, 0.0}, double scale = 1.0);

// Applies the cleaning pipeline before delegating.
ClassifierProbe with_cleaning(ClassifierProbe inner, CleanConfig config = CleanConfig::defaults());

struct EncoderArch {
  std::size_t vocab_size = 4096;
  std::size_t hidden = 16;
  std::size_t ffn = 32;
  std::size_t layers = 12;
  std::size_t max_positions = 128;
  std::size_t num_labels = kNumLabels;

  friend bool operator==(const EncoderArch&, const EncoderArch&) = default;
};

struct ParamGroup {
  std::string name;  // "embeddings", "layer.<i>", "head"
  std::size_t offset = 0;
  std::size_t size = 0;
  bool trainable = true;
};

// Contiguous group layout for an architecture (no allocation of weights).
std::vector<ParamGroup> parameter_groups(const EncoderArch& arch);

class TrainableModel {
 public:
  TrainableModel() = default;
  TrainableModel(std::string backend_id, EncoderArch arch);

  const std::string& backend_id() const { return backend_id_; }
  const EncoderArch& arch() const { return arch_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  std::vector<ParamGroup>& mutable_groups() { return groups_; }

  const ParamGroup& group(std::string_view name) const;
  std::span<double> group_params(std::string_view name);
  std::span<const double> group_params(std::string_view name) const;

  std::size_t total_param_count() const { return params_.size(); }
  std::size_t trainable_param_count() const;

  // Normal(0, 0.02) weights, zero biases.
  void initialize(std::uint64_t seed);

 private:
  std::string backend_id_;
  EncoderArch arch_;
  std::vector<double> params_;
  std::vector<ParamGroup> groups_;
};

struct FreezePlan {
  std::size_t total_layers = 12;
  std::set<std::size_t> frozen_layer_indices;
  bool freeze_embeddings = false;
  // The classification head is newly initialized and stays trainable unless a
  // plan asks for a full freeze explicitly.
  bool freeze_head = false;

  // Layers 0..7 frozen with embeddings, last 4 trainable.
  static FreezePlan first_n(std::size_t total_layers, std::size_t n);
  static FreezePlan reference_default(std::size_t total_layers = 12) { return first_n(total_layers, 8); }
  static FreezePlan none(std::size_t total_layers);
  // "first8", "firstN", "none", or "custom:<ranges>[;embeddings=on|off][;head=on|off]"
  // where ranges is e.g. "0-3,5".
  static FreezePlan parse(std::string_view spec, std::size_t total_layers);

  std::string describe() const;
  // Canonical spec string accepted by parse(): "none", "firstN" or "custom:...".
  std::string to_spec() const;
  void validate() const;
  friend bool operator==(const FreezePlan&, const FreezePlan&) = default;
};

struct FreezeSummary {
  std::size_t frozen_param_count = 0;
  std::size_t trainable_param_count = 0;
  friend bool operator==(const FreezeSummary&, const FreezeSummary&) = default;
};

FreezeSummary apply_freeze_plan(TrainableModel& model, const FreezePlan& plan);
// Same counts as apply_freeze_plan without materializing weights.
FreezeSummary count_freeze(const EncoderArch& arch, const FreezePlan& plan);

// Architectures of the encoders referenced by public identifier.
std::optional<EncoderArch> describe_backend(std::string_view backend_id);
bool is_reference_backend(std::string_view backend_id);

// Directory searched for converted checkpoints of named backends:
// $MLSENT_CACHE_DIR, else $XDG_CACHE_HOME/mlsent, else ~/.cache/mlsent.
std::string model_cache_dir();

// Resolves, in order: a checkpoint directory path; "tiny-encoder[:key=value,...]"
// (freshly initialized compact encoder); a named backend found in the cache.
TrainableModel load_encoder_backend(const std::string& backend_id, std::size_t num_labels,
                                    std::uint64_t init_seed = 42);

ClassifierProbe probe_from_model(const TrainableModel& model, const TokenizerSettings& settings);

}  // namespace mlsent
