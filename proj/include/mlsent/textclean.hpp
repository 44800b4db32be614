#pragma once

// Ordered, deterministic text-cleaning pipeline applied before tokenization.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlsent/corpus.hpp"

namespace mlsent {

enum class CleanStep {
  lowercase,
  strip_urls,
  strip_mentions_hashtags,
  non_alnum_to_space,
  strip_digits,
  strip_single_chars,
  collapse_whitespace,
  trim,
};

inline constexpr std::array<CleanStep, 8> kDefaultCleanOrder = {
    CleanStep::lowercase,          CleanStep::strip_urls,
    CleanStep::strip_mentions_hashtags, CleanStep::non_alnum_to_space,
    CleanStep::strip_digits,       CleanStep::strip_single_chars,
    CleanStep::collapse_whitespace, CleanStep::trim};

std::string_view to_string(CleanStep step);  // e.g. "strip-urls"
std::optional<CleanStep> parse_clean_step(std::string_view name);

struct CleanConfig {
  struct Entry {
    CleanStep step;
    bool enabled = true;
  };
  std::vector<Entry> steps;

  static CleanConfig defaults();
  void set_enabled(CleanStep step, bool enabled);
  bool enabled(CleanStep step) const;
};

// Individual steps, exposed for order-sensitivity tests.
std::string apply_step(CleanStep step, std::string_view text);

std::string clean(std::string_view text, const CleanConfig& config = CleanConfig::defaults());

struct CleanedCorpus {
  Corpus corpus;
  std::size_t excluded = 0;
  // Indices (into the input) of examples dropped because cleaning emptied them.
  std::vector<std::size_t> excluded_indices;
};

CleanedCorpus clean_corpus(const Corpus& corpus, const CleanConfig& config = CleanConfig::defaults());

}  // namespace mlsent
