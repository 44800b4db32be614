#include "mlsent/textclean.hpp"

#include <algorithm>

#include "mlsent/unicode.hpp"

namespace mlsent {
namespace {

using unicode::decode;

bool starts_with_at(std::string_view text, std::size_t pos, std::string_view prefix) {
  return text.substr(pos, prefix.size()) == prefix;
}

// Position where the previous code point ends; true at the start of the text or
// after whitespace / a non-alphanumeric character.
bool at_token_boundary(std::string_view text, std::size_t pos) {
  if (pos == 0) return true;
  std::size_t back = pos - 1;
  while (back > 0 && (static_cast<unsigned char>(text[back]) & 0xC0) == 0x80) --back;
  const char32_t prev = decode(text, back).value;
  return !unicode::is_alnum(prev) && !unicode::is_mark(prev);
}

std::size_t skip_to_whitespace(std::string_view text, std::size_t pos) {
  while (pos < text.size()) {
    const auto cp = decode(text, pos);
    if (unicode::is_whitespace(cp.value)) break;
    pos += cp.length;
  }
  return pos;
}

bool is_word_char(char32_t cp) { return unicode::is_alnum(cp) || unicode::is_mark(cp) || cp == U'_'; }

std::string strip_urls(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (at_token_boundary(text, i) &&
        (starts_with_at(text, i, "http://") || starts_with_at(text, i, "https://") ||
         starts_with_at(text, i, "www."))) {
      i = skip_to_whitespace(text, i);
      out += ' ';
      continue;
    }
    const auto cp = decode(text, i);
    out.append(text.substr(i, cp.length));
    i += cp.length;
  }
  return out;
}

std::string strip_mentions_hashtags(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '@' || c == '#') {
      std::size_t j = i + 1;
      while (j < text.size()) {
        const auto cp = decode(text, j);
        if (!is_word_char(cp.value)) break;
        j += cp.length;
      }
      if (j > i + 1) {
        out += ' ';
        i = j;
        continue;
      }
    }
    const auto cp = decode(text, i);
    out.append(text.substr(i, cp.length));
    i += cp.length;
  }
  return out;
}

std::string non_alnum_to_space(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const auto cp = decode(text, i);
    // Combining marks belong to the letter they modify.
    if (unicode::is_alnum(cp.value) || unicode::is_mark(cp.value)) {
      unicode::append_utf8(out, cp.value);
    } else {
      out += ' ';
    }
    i += cp.length;
  }
  return out;
}

std::string strip_digits(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const auto cp = decode(text, i);
    if (!unicode::is_digit(cp.value)) out.append(text.substr(i, cp.length));
    i += cp.length;
  }
  return out;
}

// Drops whitespace-delimited tokens made of one Latin letter (plus any marks).
std::string strip_single_chars(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto cp = decode(text, i);
    if (unicode::is_whitespace(cp.value)) {
      out.append(text.substr(i, cp.length));
      i += cp.length;
      continue;
    }
    const std::size_t end = skip_to_whitespace(text, i);
    bool single_latin = unicode::is_latin_letter(cp.value);
    for (std::size_t k = i + cp.length; single_latin && k < end;) {
      const auto next = decode(text, k);
      if (!unicode::is_mark(next.value)) single_latin = false;
      k += next.length;
    }
    if (!single_latin) out.append(text.substr(i, end - i));
    i = end;
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = false;
  for (std::size_t i = 0; i < text.size();) {
    const auto cp = decode(text, i);
    if (unicode::is_whitespace(cp.value)) {
      if (!in_space) out += ' ';
      in_space = true;
    } else {
      out.append(text.substr(i, cp.length));
      in_space = false;
    }
    i += cp.length;
  }
  return out;
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  while (begin < text.size()) {
    const auto cp = decode(text, begin);
    if (!unicode::is_whitespace(cp.value)) break;
    begin += cp.length;
  }
  std::size_t end = begin;
  for (std::size_t i = begin; i < text.size();) {
    const auto cp = decode(text, i);
    i += cp.length;
    if (!unicode::is_whitespace(cp.value)) end = i;
  }
  return std::string(text.substr(begin, end - begin));
}

constexpr std::array<std::string_view, 8> kStepNames = {
    "lowercase",    "strip-urls",         "strip-mentions-hashtags", "non-alnum-to-space",
    "strip-digits", "strip-single-chars", "collapse-whitespace",     "trim"};

}  // namespace

std::string_view to_string(CleanStep step) { return kStepNames[static_cast<std::size_t>(step)]; }

std::optional<CleanStep> parse_clean_step(std::string_view name) {
  for (std::size_t i = 0; i < kStepNames.size(); ++i) {
    if (kStepNames[i] == name) return static_cast<CleanStep>(i);
  }
  return std::nullopt;
}

CleanConfig CleanConfig::defaults() {
  CleanConfig cfg;
  for (CleanStep s : kDefaultCleanOrder) cfg.steps.push_back({s, true});
  return cfg;
}

void CleanConfig::set_enabled(CleanStep step, bool on) {
  for (auto& e : steps) {
    if (e.step == step) e.enabled = on;
  }
}

bool CleanConfig::enabled(CleanStep step) const {
  return std::any_of(steps.begin(), steps.end(),
                     [&](const Entry& e) { return e.step == step && e.enabled; });
}

std::string apply_step(CleanStep step, std::string_view text) {
  switch (step) {
    case CleanStep::lowercase: return unicode::fold_case(text);
    case CleanStep::strip_urls: return strip_urls(text);
    case CleanStep::strip_mentions_hashtags: return strip_mentions_hashtags(text);
    case CleanStep::non_alnum_to_space: return non_alnum_to_space(text);
    case CleanStep::strip_digits: return strip_digits(text);
    case CleanStep::strip_single_chars: return strip_single_chars(text);
    case CleanStep::collapse_whitespace: return collapse_whitespace(text);
    case CleanStep::trim: return trim(text);
  }
  return std::string(text);
}

std::string clean(std::string_view text, const CleanConfig& config) {
  std::string current(text);
  for (const auto& entry : config.steps) {
    if (entry.enabled) current = apply_step(entry.step, current);
  }
  return current;
}

CleanedCorpus clean_corpus(const Corpus& corpus, const CleanConfig& config) {
  CleanedCorpus out;
  out.corpus.source_id = corpus.source_id + "#cleaned";
  out.corpus.warnings = corpus.warnings;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& ex = corpus.examples[i];
    std::string text = clean(ex.text, config);
    if (unicode::split_units(text).empty()) {
      ++out.excluded;
      out.excluded_indices.push_back(i);
      continue;
    }
    out.corpus.examples.push_back({std::move(text), ex.label, ex.language});
  }
  return out;
}

}  // namespace mlsent
