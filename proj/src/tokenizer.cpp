#include "mlsent/tokenizer.hpp"

#include <algorithm>
#include <string>

#include "mlsent/error.hpp"
#include "mlsent/unicode.hpp"

namespace mlsent {

HashTokenizer::HashTokenizer(std::size_t vocab_size, TokenizerSettings settings)
    : vocab_size_(vocab_size), settings_(settings) {
  if (vocab_size_ <= kReserved) throw ArgumentError("vocabulary too small");
  if (settings_.max_length == 0) throw ArgumentError("max_length must be positive");
}

std::int32_t HashTokenizer::id_of(std::string_view unit) const {
  if (unit.empty()) return kUnkId;
  // FNV-1a, 64-bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : unit) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::int32_t>(kReserved + h % (vocab_size_ - kReserved));
}

Encoding HashTokenizer::encode(std::string_view text) const {
  const std::string folded = unicode::fold_case(text);
  const auto units = unicode::split_units(folded);
  if (units.size() > settings_.max_length && !settings_.truncation) {
    throw ArgumentError("input has " + std::to_string(units.size()) +
                        " tokens, exceeds max_length " + std::to_string(settings_.max_length));
  }
  Encoding enc;
  enc.length = std::min(units.size(), settings_.max_length);
  enc.ids.assign(settings_.max_length, kPadId);
  enc.mask.assign(settings_.max_length, 0);
  for (std::size_t i = 0; i < enc.length; ++i) {
    enc.ids[i] = id_of(std::string_view(folded).substr(units[i].begin, units[i].size()));
    enc.mask[i] = 1;
  }
  return enc;
}

}  // namespace mlsent
