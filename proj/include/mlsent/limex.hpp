#pragma once

// Local surrogate explanations for text: word-level presence masks, an
// exponential proximity kernel over cosine distance, and a weighted ridge fit on
// the probe's target-class probability.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlsent/backend.hpp"
#include "mlsent/labels.hpp"
#include "mlsent/unicode.hpp"

namespace mlsent::limex {

struct InterpretableText {
  std::string original;
  std::vector<std::string> tokens;          // case-folded units
  std::vector<unicode::Span> positions;     // byte spans into `original`

  std::size_t size() const { return tokens.size(); }
  // Kept tokens in order; a single space wherever the original had whitespace
  // between two kept tokens, nothing where they were adjacent.
  std::string reconstruct(std::span<const std::uint8_t> mask) const;
};

// ArgumentError for empty or whitespace-only text.
InterpretableText interpret_tokens(std::string_view text, const unicode::Segmenter& segmenter = {});

struct LimeConfig {
  std::size_t n_samples = 1000;
  double kernel_width = 0.25;  // sigma, over cosine distance in [0, 1]
  double ridge_lambda = 1.0;
  std::size_t top_k = 10;
  std::uint64_t seed = 42;
  // Token counts up to this value enumerate all 2^n masks instead of sampling.
  std::size_t enumerate_threshold = 12;
  // Probe calls per batch.
  std::size_t batch_size = 256;
  unicode::Segmenter segmenter;

  void validate() const;
};

struct MaskMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> data;  // row-major, 1 = token kept

  std::span<const std::uint8_t> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<std::uint8_t> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

// Row 0 is always all-ones.
MaskMatrix sample_masks(std::size_t n_tokens, const LimeConfig& config);

// exp(-D^2 / sigma^2), D = 1 - cos(mask, ones); an all-zero mask has D = 1.
double proximity(std::span<const std::uint8_t> mask, double sigma);

struct SurrogateFit {
  std::vector<double> coefficients;
  double intercept = 0.0;
  double r2 = 1.0;
  // Features that were constant over the weighted samples (or linearly
  // dependent on earlier ones); their coefficient is 0.
  std::vector<bool> degenerate;
  // Targets had no weighted variance; r2 is reported as 1.
  bool constant_target = false;
};

// argmin over (beta, b) of sum_i w_i (y_i - b - z_i.beta)^2 + lambda |beta|^2,
// intercept unpenalized, via normal equations on the weighted, column-centred
// system.
SurrogateFit fit_surrogate(const MaskMatrix& masks, std::span<const double> targets,
                           std::span<const double> weights, double lambda);

struct Attribution {
  std::string token;
  std::size_t start = 0;  // byte offsets into Explanation::text
  std::size_t end = 0;
  double weight = 0.0;

  friend bool operator==(const Attribution&, const Attribution&) = default;
};

struct Explanation {
  std::string text;
  Label target_class = Label::neutral;
  double probe_probability = 0.0;
  double intercept = 0.0;
  double surrogate_r2 = 1.0;
  // Sorted by |weight| descending, ties by position ascending; at most top_k.
  std::vector<Attribution> attributions;
  bool degenerate = false;
  std::size_t samples = 0;
};

// `target` empty means "the probe's argmax on the original text".
Explanation explain(const ClassifierProbe& probe, std::string_view text, std::optional<Label> target,
                    const LimeConfig& config = {});

}  // namespace mlsent::limex
