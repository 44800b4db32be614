#pragma once

// Evaluation: confusion matrix, per-class and macro-averaged scores, pooled
// and per-language reports, and the model comparison table.

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlsent/backend.hpp"
#include "mlsent/corpus.hpp"

namespace mlsent {

// Rows are true classes, columns predicted classes, in the pinned class order.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumLabels>, kNumLabels> counts{};

  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_sum(std::size_t c) const;
  std::size_t col_sum(std::size_t c) const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const Label> y_true, std::span<const Label> y_pred);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // true examples of the class
};

struct Scores {
  double accuracy = 0.0;
  // Macro averages over the three classes.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  std::array<ClassScores, kNumLabels> per_class{};
  std::size_t n = 0;
  // Number of per-class ratios that were 0/0 and scored as 0.
  std::size_t zero_division_warnings = 0;
};

Scores scores(const ConfusionMatrix& cm);

struct EvalReport {
  Scores overall;
  ConfusionMatrix confusion;
  std::map<std::string, Scores> per_language;
  std::size_t n = 0;
  std::string averaging = "macro";
};

EvalReport evaluate(const ClassifierProbe& probe, const Corpus& test_set, std::size_t batch_size = 512);

std::string report_json(const EvalReport& report);
EvalReport parse_report_json(const std::string& text);

struct ComparisonTable {
  std::string text;      // one plain row per model
  std::string markdown;  // pipe table plus a plain-row block
  std::string json;
};

// Rows keep input order.
ComparisonTable comparison_table(const std::vector<std::pair<std::string, EvalReport>>& reports);
// "<name> <accuracy>% <precision> <recall> <f1>" with two decimals each.
std::string comparison_row(const std::string& name, const Scores& s);

}  // namespace mlsent
