#pragma once

// Thin UTF-8 helpers over ICU character properties.

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace mlsent::unicode {

// Half-open byte range into a UTF-8 string.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct CodePoint {
  char32_t value;      // U+FFFD for malformed input
  std::size_t length;  // bytes consumed, >= 1
};

// Decode the code point starting at byte `pos`.
CodePoint decode(std::string_view text, std::size_t pos);
void append_utf8(std::string& out, char32_t cp);

bool is_whitespace(char32_t cp);
bool is_letter(char32_t cp);
bool is_digit(char32_t cp);  // decimal digit (Nd) in any script
bool is_mark(char32_t cp);   // combining mark (Mn, Mc, Me)
// Letter or decimal digit in any script.
bool is_alnum(char32_t cp);
bool is_latin_letter(char32_t cp);
// Scripts written without inter-word spaces: Han, Hiragana, Katakana, Bopomofo.
bool is_cjk(char32_t cp);

// Default (non-Turkic) full Unicode case folding.
std::string fold_case(std::string_view text);

bool contains_cjk(std::string_view text);

// Splits a run of CJK characters (given as bytes) into word spans relative to
// the run. Used to replace the per-character fallback.
using Segmenter = std::function<std::vector<Span>(std::string_view run)>;

// Interpretable units: whitespace-separated tokens, with each maximal CJK run
// split per character (or by `segmenter` when provided).
std::vector<Span> split_units(std::string_view text, const Segmenter& segmenter = {});

// Dictionary-based word segmenter backed by ICU's word break iterator.
Segmenter icu_word_segmenter(const std::string& locale = "ja");

}  // namespace mlsent::unicode
