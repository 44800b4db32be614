#pragma once

// Resolved configuration for CLI commands. Layering, lowest first: built-in
// defaults (the reference full-scale setup), config file, --profile overrides,
// explicit flags.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mlsent/corpus.hpp"
#include "mlsent/textclean.hpp"
#include "mlsent/trainer.hpp"

namespace mlsent::cli {

struct LimeSettings {
  std::size_t samples = 1000;
  double kernel_width = 0.25;
  double ridge_lambda = 1.0;
  std::size_t top_k = 10;
  std::uint64_t seed = 42;
  std::string text;                 // empty: first test example
  std::string target = "predicted";
};

struct RunConfig {
  std::string profile;  // "", "desk" or "paper"
  std::filesystem::path data;
  CleanConfig clean = CleanConfig::defaults();
  SplitRatios split;
  std::uint64_t split_seed = 42;
  std::string model = "xlm-roberta-base";
  std::string freeze = "first8";
  std::size_t max_length = 128;
  TrainConfig trainer;
  LimeSettings limex;
  std::string report_name;  // empty: derived from model and freeze plan
};

// Accepts either a config document or a run manifest (whose "config" snapshot
// is used). Relative paths resolve against the file's directory. Unknown
// sections or keys are a ValidationError.
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
RunConfig parse_run_config(const nlohmann::json& doc, RunConfig base, const std::filesystem::path& base_dir);

void apply_profile(RunConfig& config, std::string_view profile);

nlohmann::json run_config_json(const RunConfig& config);

// "XLM-RoBERTa-base (Frozen)" style row label.
std::string display_name(const RunConfig& config);

}  // namespace mlsent::cli
