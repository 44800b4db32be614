#pragma once

// On-disk model directory: config.json (architecture, groups, tokenizer),
// weights.bin (raw little-endian float64 with checksum), and the
// freeze_plan.json sidecar.

#include <filesystem>
#include <optional>

#include "mlsent/backend.hpp"

namespace mlsent {

void save_model(const TrainableModel& model, const TokenizerSettings& tokenizer,
                const std::filesystem::path& dir);

struct LoadedModel {
  TrainableModel model;
  TokenizerSettings tokenizer;
};

// LoadError if the directory or files are missing; CapabilityError if the
// config lacks per-layer parameter groups; CheckpointError on corrupt weights.
LoadedModel load_model(const std::filesystem::path& dir);
bool looks_like_model_dir(const std::filesystem::path& dir);

void save_freeze_plan(const FreezePlan& plan, const FreezeSummary& summary,
                      const std::filesystem::path& dir);
std::optional<FreezePlan> load_freeze_plan(const std::filesystem::path& dir);

// Raw float64 blobs (weights, optimizer moments).
void write_doubles(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_doubles(const std::filesystem::path& path);

}  // namespace mlsent
