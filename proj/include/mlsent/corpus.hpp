#pragma once

// Dataset ingestion, stratified splitting, and language/label distribution reports.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mlsent/labels.hpp"

namespace mlsent {

struct LabeledExample {
  std::string text;  // raw, uncleaned
  Label label = Label::neutral;
  std::string language;  // lowercase ISO-639-1 code

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct Corpus {
  std::vector<LabeledExample> examples;
  std::string source_id;
  // Non-fatal findings from loading, e.g. unrecognized language codes.
  std::vector<std::string> warnings;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

enum class CorpusFormat { jsonl, csv };

// Guesses from the extension; anything other than .csv is JSONL.
CorpusFormat format_from_path(const std::filesystem::path& path);

// Throws ValidationError (naming the line) if the example breaks an invariant.
// Normalizes the language code to lowercase in place. Returns a warning text for
// codes outside ISO-639-1, empty otherwise.
std::string validate_example(LabeledExample& example, std::size_t line);

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path,
                 CorpusFormat format = CorpusFormat::jsonl);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct CorpusSplit {
  Corpus train;
  Corpus val;
  Corpus test;
};

// Label-stratified, seeded partition. Each split keeps input order.
CorpusSplit split_corpus(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed);

struct DistributionReport {
  std::map<std::string, std::size_t> language_counts;
  std::map<Label, std::size_t> label_counts;  // always holds all three labels
  std::size_t total = 0;
};

DistributionReport distribution_report(const Corpus& corpus);

// {"total": N, "languages": {...}, "labels": {...}}
std::string distribution_json(const DistributionReport& report);

// Writes distribution.json plus one SVG bar chart per histogram. Returns the
// written paths in a fixed order.
std::vector<std::filesystem::path> emit_distribution_artifacts(
    const DistributionReport& report, const std::filesystem::path& out_dir);

}  // namespace mlsent
