#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace mlsent {

// Class order is pinned globally: positive=0, neutral=1, negative=2.
enum class Label : std::size_t { positive = 0, neutral = 1, negative = 2 };

inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<Label, kNumLabels> kLabelOrder = {Label::positive, Label::neutral,
                                                              Label::negative};

constexpr std::size_t index_of(Label label) { return static_cast<std::size_t>(label); }
Label label_at(std::size_t index);

std::string_view to_string(Label label);
// Exact match against the three lowercase names.
std::optional<Label> parse_label(std::string_view text);

}  // namespace mlsent
