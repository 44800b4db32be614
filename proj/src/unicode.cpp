#include "mlsent/unicode.hpp"

#include <unicode/brkiter.h>
#include <unicode/uchar.h>
#include <unicode/ucasemap.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include <memory>

#include "mlsent/error.hpp"

namespace mlsent::unicode {

CodePoint decode(std::string_view text, std::size_t pos) {
  int32_t i = static_cast<int32_t>(pos);
  const int32_t len = static_cast<int32_t>(text.size());
  UChar32 c = 0;
  U8_NEXT(reinterpret_cast<const uint8_t*>(text.data()), i, len, c);
  if (c < 0) c = 0xFFFD;
  return {static_cast<char32_t>(c), static_cast<std::size_t>(i) - pos};
}

void append_utf8(std::string& out, char32_t cp) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t n = 0;
  UBool error = false;
  U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(cp), error);
  if (error) {
    out += "\xEF\xBF\xBD";
    return;
  }
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

bool is_whitespace(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }
bool is_letter(char32_t cp) { return u_isalpha(static_cast<UChar32>(cp)); }
bool is_digit(char32_t cp) { return u_isdigit(static_cast<UChar32>(cp)); }

bool is_mark(char32_t cp) {
  const int32_t mask = U_GET_GC_MASK(static_cast<UChar32>(cp));
  return (mask & U_GC_M_MASK) != 0;
}

bool is_alnum(char32_t cp) { return is_letter(cp) || is_digit(cp); }

bool is_latin_letter(char32_t cp) {
  if (!is_letter(cp)) return false;
  UErrorCode status = U_ZERO_ERROR;
  return uscript_getScript(static_cast<UChar32>(cp), &status) == USCRIPT_LATIN &&
         U_SUCCESS(status);
}

bool is_cjk(char32_t cp) {
  UErrorCode status = U_ZERO_ERROR;
  const UScriptCode sc = uscript_getScript(static_cast<UChar32>(cp), &status);
  if (U_FAILURE(status)) return false;
  return sc == USCRIPT_HAN || sc == USCRIPT_HIRAGANA || sc == USCRIPT_KATAKANA ||
         sc == USCRIPT_BOPOMOFO ||
         // The prolonged sound mark and iteration marks carry Common/Inherited script.
         cp == U'ー' || cp == U'々' || cp == U'ゝ' || cp == U'ゞ' ||
         cp == U'ヽ' || cp == U'ヾ';
}

std::string fold_case(std::string_view text) {
  if (text.empty()) return {};
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<UCaseMap, decltype(&ucasemap_close)> csm(
      ucasemap_open(nullptr, U_FOLD_CASE_DEFAULT, &status), &ucasemap_close);
  if (U_FAILURE(status)) throw CapabilityError("ICU case map unavailable");
  std::string out(text.size() + 16, '\0');
  int32_t n = ucasemap_utf8FoldCase(csm.get(), out.data(), static_cast<int32_t>(out.size()),
                                    text.data(), static_cast<int32_t>(text.size()), &status);
  if (status == U_BUFFER_OVERFLOW_ERROR) {
    status = U_ZERO_ERROR;
    out.assign(static_cast<std::size_t>(n), '\0');
    n = ucasemap_utf8FoldCase(csm.get(), out.data(), n, text.data(),
                              static_cast<int32_t>(text.size()), &status);
  }
  if (U_FAILURE(status) && status != U_STRING_NOT_TERMINATED_WARNING) {
    throw CapabilityError(std::string("ICU case folding failed: ") + u_errorName(status));
  }
  out.resize(static_cast<std::size_t>(n));
  return out;
}

bool contains_cjk(std::string_view text) {
  for (std::size_t i = 0; i < text.size();) {
    const CodePoint cp = decode(text, i);
    if (is_cjk(cp.value)) return true;
    i += cp.length;
  }
  return false;
}

std::vector<Span> split_units(std::string_view text, const Segmenter& segmenter) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < text.size()) {
    CodePoint cp = decode(text, i);
    if (is_whitespace(cp.value)) {
      i += cp.length;
      continue;
    }
    // One whitespace-delimited token: [i, end).
    const std::size_t begin = i;
    std::size_t end = i;
    while (end < text.size()) {
      const CodePoint c = decode(text, end);
      if (is_whitespace(c.value)) break;
      end += c.length;
    }
    // Within the token, alternate non-CJK runs (kept whole) and CJK runs.
    std::size_t run = begin;
    while (run < end) {
      const bool cjk = is_cjk(decode(text, run).value);
      std::size_t stop = run;
      while (stop < end) {
        const CodePoint c = decode(text, stop);
        // Combining marks stay with whatever precedes them.
        if (stop > run && is_mark(c.value)) {
          stop += c.length;
          continue;
        }
        if (is_cjk(c.value) != cjk) break;
        stop += c.length;
      }
      if (!cjk) {
        out.push_back({run, stop});
      } else if (segmenter) {
        for (const Span& s : segmenter(text.substr(run, stop - run))) {
          if (s.size() > 0) out.push_back({run + s.begin, run + s.end});
        }
      } else {
        std::size_t k = run;
        while (k < stop) {
          std::size_t next = k + decode(text, k).length;
          while (next < stop && is_mark(decode(text, next).value)) next += decode(text, next).length;
          out.push_back({k, next});
          k = next;
        }
      }
      run = stop;
    }
    i = end;
  }
  return out;
}

Segmenter icu_word_segmenter(const std::string& locale) {
  return [locale](std::string_view run) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::UnicodeString ustr = icu::UnicodeString::fromUTF8(
        icu::StringPiece(run.data(), static_cast<int32_t>(run.size())));
    std::unique_ptr<icu::BreakIterator> it(
        icu::BreakIterator::createWordInstance(icu::Locale(locale.c_str()), status));
    if (U_FAILURE(status)) throw CapabilityError("ICU word break iterator unavailable");
    it->setText(ustr);
    // Map UTF-16 offsets back to UTF-8 byte offsets.
    std::vector<std::size_t> byte_at(static_cast<std::size_t>(ustr.length()) + 1, run.size());
    {
      std::size_t byte = 0;
      int32_t u16 = 0;
      while (byte < run.size()) {
        const CodePoint cp = decode(run, byte);
        byte_at[static_cast<std::size_t>(u16)] = byte;
        u16 += cp.value > 0xFFFF ? 2 : 1;
        byte += cp.length;
      }
      byte_at[static_cast<std::size_t>(ustr.length())] = run.size();
    }
    std::vector<Span> spans;
    int32_t start = it->first();
    for (int32_t stop = it->next(); stop != icu::BreakIterator::DONE;
         start = stop, stop = it->next()) {
      spans.push_back({byte_at[static_cast<std::size_t>(start)],
                       byte_at[static_cast<std::size_t>(stop)]});
    }
    return spans;
  };
}

}  // namespace mlsent::unicode
