#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace mlsent {

enum class Padding { max_length };

struct TokenizerSettings {
  std::size_t max_length = 128;
  Padding padding = Padding::max_length;
  bool truncation = true;
  // 0 means "whatever the model was built with"; otherwise must match it.
  std::size_t vocab_size = 0;
};

struct Encoding {
  std::vector<std::int32_t> ids;   // length max_length, padded with kPadId
  std::vector<std::uint8_t> mask;  // 1 for real tokens
  std::size_t length = 0;          // number of real tokens
};

// Word-level hashing tokenizer: case-folded whitespace units with CJK runs split
// per character, each hashed into a fixed vocabulary.
class HashTokenizer {
 public:
  static constexpr std::int32_t kPadId = 0;
  static constexpr std::int32_t kUnkId = 1;
  static constexpr std::size_t kReserved = 2;

  HashTokenizer(std::size_t vocab_size, TokenizerSettings settings);

  std::size_t vocab_size() const { return vocab_size_; }
  const TokenizerSettings& settings() const { return settings_; }

  std::int32_t id_of(std::string_view unit) const;
  // Throws ArgumentError when the text is too long and truncation is off.
  Encoding encode(std::string_view text) const;

 private:
  std::size_t vocab_size_;
  TokenizerSettings settings_;
};

}  // namespace mlsent
