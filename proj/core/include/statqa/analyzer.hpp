#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace statqa {

/// Half-open byte range [begin, end) into some UTF-8 buffer.
struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct TokenStream {
  std::vector<std::string> tokens;
  std::vector<ByteSpan> offsets;  // into the analyzed text, one per token

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
};

/// Version tag written into every persisted index. Bump whenever the
/// segmentation or normalization rules change.
inline constexpr std::string_view kTokenizerVersion = "syllable-nfc-casefold/1";

/// NFC normalization. Invalid UTF-8 sequences are replaced with U+FFFD.
std::string normalize_nfc(std::string_view text);

/// NFC followed by Unicode default case folding (no diacritic stripping).
std::string fold_case(std::string_view text);

/// Deterministic syllable-level tokenizer.
///
/// Tokens are maximal runs of letters, combining marks and digits; every
/// other code point (whitespace, punctuation, symbols) separates tokens and is
/// dropped. Each token is NFC-normalized and case-folded; its offsets point at
/// the raw bytes it came from, so `fold_case(text.substr(offset))` reproduces
/// the token.
class Analyzer {
 public:
  Analyzer() = default;
  explicit Analyzer(std::unordered_set<std::string> stop_words);

  TokenStream analyze(std::string_view text) const;
  std::vector<std::string> tokens(std::string_view text) const;

  /// Number of tokens `analyze` would produce. Every length filter uses this.
  std::size_t word_count(std::string_view text) const;

  /// Tokenizer version plus a stop-word marker when a list is configured.
  std::string version() const;

  const std::unordered_set<std::string>& stop_words() const noexcept { return stop_words_; }

 private:
  std::unordered_set<std::string> stop_words_;
};

/// Free-function forms using the default (stop-word free) analyzer.
TokenStream analyze(std::string_view text);
std::size_t word_count(std::string_view text);

}  // namespace statqa
