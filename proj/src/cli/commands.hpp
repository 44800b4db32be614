#pragma once

// Subcommand implementations; each returns an exit code and throws
// mlsent::Error on failure (mapped to exit codes by run_cli).

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mlsent/cli/run_config.hpp"

namespace mlsent::cli {

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

struct StatsArgs {
  std::filesystem::path data;
  std::filesystem::path out;
};

struct PreprocessArgs {
  std::filesystem::path in;
  std::filesystem::path out;
  std::filesystem::path config;
  std::vector<std::string> disable;
};

struct TrainArgs {
  std::string model;
  std::string freeze;
  std::filesystem::path data;
  std::filesystem::path config;
  std::filesystem::path out;
  std::filesystem::path resume;
  std::string profile;
  std::size_t max_steps = 0;
};

struct EvaluateArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::filesystem::path out;
  std::size_t batch_size = 512;
};

struct ExplainArgs {
  std::filesystem::path checkpoint;
  std::string text;
  std::string target = "predicted";
  std::size_t samples = 1000;
  std::uint64_t seed = 42;
  std::size_t top_k = 10;
  double kernel_width = 0.25;
  std::string format = "html";
  std::filesystem::path out;
};

struct CompareArgs {
  std::vector<std::string> reports;  // NAME=PATH
  std::filesystem::path rows;
  std::filesystem::path out;
};

struct PipelineArgs {
  std::filesystem::path config;
  std::string profile;
  std::filesystem::path out;
  std::filesystem::path data;
  std::string model;
  std::string freeze;
  bool dry_run = false;
};

int cmd_stats(const StatsArgs& a, Streams io);
int cmd_preprocess(const PreprocessArgs& a, Streams io);
int cmd_train(const TrainArgs& a, Streams io);
int cmd_evaluate(const EvaluateArgs& a, Streams io);
int cmd_explain(const ExplainArgs& a, Streams io);
int cmd_compare(const CompareArgs& a, Streams io);
int cmd_pipeline(const PipelineArgs& a, Streams io);

// Shared helpers.
Corpus load_any(const std::filesystem::path& path);
std::filesystem::path find_split_file(const std::filesystem::path& dir, const std::string& stem);
void write_file(const std::filesystem::path& path, const std::string& content);
std::optional<Label> parse_target(const std::string& name);

}  // namespace mlsent::cli
