#include "statqa/analyzer.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <stdexcept>

namespace statqa {
namespace {

bool is_ascii(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* instance = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || instance == nullptr) {
    throw std::runtime_error(std::string("ICU NFC normalizer unavailable: ") + u_errorName(status));
  }
  return *instance;
}

icu::UnicodeString nfc_unicode(std::string_view text) {
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc().normalize(source, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error(std::string("NFC normalization failed: ") + u_errorName(status));
  }
  return out;
}

std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

constexpr uint32_t kWordMask = U_GC_L_MASK | U_GC_M_MASK | U_GC_N_MASK;

bool is_word_char(UChar32 c) {
  return c >= 0 && (U_GET_GC_MASK(c) & kWordMask) != 0;
}

template <typename Emit>
void segment(std::string_view text, Emit&& emit) {
  const auto* data = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t pos = 0;
  int32_t token_start = -1;
  while (pos < length) {
    const int32_t char_start = pos;
    UChar32 c;
    U8_NEXT(data, pos, length, c);
    if (is_word_char(c)) {
      if (token_start < 0) token_start = char_start;
    } else if (token_start >= 0) {
      emit(static_cast<std::size_t>(token_start), static_cast<std::size_t>(char_start));
      token_start = -1;
    }
  }
  if (token_start >= 0) {
    emit(static_cast<std::size_t>(token_start), static_cast<std::size_t>(length));
  }
}

}  // namespace

std::string normalize_nfc(std::string_view text) {
  if (is_ascii(text)) return std::string(text);
  return to_utf8(nfc_unicode(text));
}

std::string fold_case(std::string_view text) {
  if (is_ascii(text)) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](char c) {
      return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    });
    return out;
  }
  icu::UnicodeString s = nfc_unicode(text);
  s.foldCase(U_FOLD_CASE_DEFAULT);
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc().normalize(s, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error(std::string("NFC normalization failed: ") + u_errorName(status));
  }
  return to_utf8(out);
}

Analyzer::Analyzer(std::unordered_set<std::string> stop_words)
    : stop_words_(std::move(stop_words)) {}

TokenStream Analyzer::analyze(std::string_view text) const {
  TokenStream stream;
  segment(text, [&](std::size_t begin, std::size_t end) {
    std::string token = fold_case(text.substr(begin, end - begin));
    if (token.empty() || stop_words_.contains(token)) return;
    stream.tokens.push_back(std::move(token));
    stream.offsets.push_back({begin, end});
  });
  return stream;
}

std::vector<std::string> Analyzer::tokens(std::string_view text) const {
  return analyze(text).tokens;
}

std::size_t Analyzer::word_count(std::string_view text) const {
  if (stop_words_.empty()) {
    std::size_t n = 0;
    segment(text, [&](std::size_t, std::size_t) { ++n; });
    return n;
  }
  return analyze(text).size();
}

std::string Analyzer::version() const {
  std::string v(kTokenizerVersion);
  if (!stop_words_.empty()) v += "+stop:" + std::to_string(stop_words_.size());
  return v;
}

TokenStream analyze(std::string_view text) { return Analyzer{}.analyze(text); }

std::size_t word_count(std::string_view text) { return Analyzer{}.word_count(text); }

}  // namespace statqa
