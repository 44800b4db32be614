#pragma once

// Fine-tuning loop: schedule derivation, AdamW with linear warmup/decay,
// gradient accumulation, per-epoch evaluation and checkpointing, resume.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mlsent/backend.hpp"
#include "mlsent/corpus.hpp"
#include "mlsent/metrics.hpp"

namespace mlsent {

enum class EvalStrategy { epoch };
enum class SaveStrategy { epoch };

struct TrainConfig {
  double learning_rate = 5e-5;
  std::size_t train_batch_size = 512;  // per device
  std::size_t eval_batch_size = 512;   // per device
  std::size_t grad_accumulation_steps = 2;
  std::size_t epochs = 5;
  double warmup_ratio = 0.01;
  bool mixed_precision = true;  // FP16
  std::uint64_t seed = 42;
  EvalStrategy eval_strategy = EvalStrategy::epoch;
  SaveStrategy save_strategy = SaveStrategy::epoch;
  double weight_decay = 0.0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Keys follow the usual trainer argument names: learning_rate,
// per_device_train_batch_size, per_device_eval_batch_size,
// gradient_accumulation_steps, num_train_epochs, warmup_ratio,
// evaluation_strategy, save_strategy, fp16, seed (+ weight_decay).
std::string train_config_json(const TrainConfig& config);
// Unknown keys are rejected; absent keys keep the value from `base`.
TrainConfig parse_train_config(const std::string& json_text, const TrainConfig& base = {});

struct TrainSchedule {
  std::size_t steps_per_epoch = 0;
  std::size_t total_optimizer_steps = 0;
  std::size_t warmup_steps = 0;
  std::size_t effective_batch_size = 0;
  friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;
};

TrainSchedule derive_schedule(const TrainConfig& config, std::size_t train_set_size);
// Multiplier on the base learning rate for optimizer step `step` (0-based).
double lr_multiplier(const TrainSchedule& schedule, std::size_t step);

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;  // completed optimizer steps
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<EvalReport> eval;
  std::string checkpoint;
  double wall_seconds = 0.0;
  std::size_t global_step = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_seconds;
};

std::string epoch_record_json(const EpochRecord& record);  // one JSONL line, no newline

struct TrainOptions {
  // Where checkpoints and history.jsonl go; empty disables both.
  std::filesystem::path out_dir;
  TokenizerSettings tokenizer;
  std::size_t start_epoch = 0;
  std::optional<OptimizerState> optimizer;
  // Stop after this many optimizer steps (0 = run the full schedule). An epoch
  // cut short this way produces no record.
  std::size_t max_steps = 0;
};

struct TrainResult {
  TrainableModel model;
  TrainHistory history;
  FreezeSummary freeze;
  OptimizerState optimizer;
  TrainSchedule schedule;
  bool fp16_active = false;
};

// Mixed precision is only honoured on hardware with native FP16 arithmetic;
// this CPU implementation always computes in float64.
bool fp16_supported();

TrainResult train(TrainableModel model, const FreezePlan& plan, const Corpus& train_set,
                  const Corpus& val_set, const TrainConfig& config, const TrainOptions& options = {});

struct ResumeState {
  TrainableModel model;
  TrainConfig config;
  std::size_t completed_epochs = 0;
  FreezePlan plan;
  TokenizerSettings tokenizer;
  OptimizerState optimizer;
};

ResumeState resume(const std::filesystem::path& checkpoint_dir);

}  // namespace mlsent
