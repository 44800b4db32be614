#include "mlsent/labels.hpp"

#include "mlsent/error.hpp"

namespace mlsent {

Label label_at(std::size_t index) {
  if (index >= kNumLabels) throw ArgumentError("label index out of range: " + std::to_string(index));
  return kLabelOrder[index];
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::positive: return "positive";
    case Label::neutral: return "neutral";
    case Label::negative: return "negative";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view text) {
  for (Label l : kLabelOrder) {
    if (to_string(l) == text) return l;
  }
  return std::nullopt;
}

}  // namespace mlsent
