#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "statqa/analyzer.hpp"
#include "statqa/corpus.hpp"

namespace statqa {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const;
  friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

struct Posting {
  std::uint32_t doc = 0;
  std::uint32_t tf = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

/// One retrieved document.
struct Hit {
  std::uint32_t doc = 0;
  double score = 0.0;
};

/// Immutable inverted index with Okapi BM25 scoring.
///
/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), which keeps every idf >= 0.
/// Repeated query terms contribute once per occurrence.
class InvertedIndex {
 public:
  InvertedIndex() = default;

  /// Indexes the prefixed text of every article, doc ordinal = corpus order.
  static InvertedIndex build(const Corpus& corpus, const Analyzer& analyzer,
                             const Bm25Params& params = {});

  /// Indexes pre-tokenized documents. `keys` may be empty (anonymous docs),
  /// otherwise it must be parallel to `documents`.
  static InvertedIndex build(const std::vector<std::vector<std::string>>& documents,
                             std::vector<ArticleKey> keys, const Bm25Params& params,
                             std::string tokenizer_version);

  std::size_t doc_count() const noexcept { return doc_lengths_.size(); }
  std::size_t vocabulary_size() const noexcept { return postings_.size(); }
  double avg_doc_length() const noexcept { return avg_doc_length_; }
  std::uint32_t doc_length(std::uint32_t doc) const { return doc_lengths_.at(doc); }
  const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
  const Bm25Params& params() const noexcept { return params_; }
  const std::string& tokenizer_version() const noexcept { return tokenizer_version_; }

  /// Empty span for unknown terms.
  std::span<const Posting> postings(std::string_view term) const;
  std::size_t document_frequency(std::string_view term) const { return postings(term).size(); }
  double idf(std::string_view term) const;

  const ArticleKey& doc_key(std::uint32_t doc) const { return doc_keys_.at(doc); }
  bool has_keys() const noexcept { return !doc_keys_.empty(); }

  double score(std::span<const std::string> query_tokens, std::uint32_t doc) const;

  /// Scores of every document, indexed by ordinal.
  std::vector<double> score_all(std::span<const std::string> query_tokens) const;

  /// The k best documents: score descending, ties by ascending ordinal.
  /// Returns min(k, doc_count()) hits. Throws std::invalid_argument for k == 0.
  std::vector<Hit> top_k(std::span<const std::string> query_tokens, std::size_t k) const;

  /// Deterministic JSON encoding (terms sorted). Equal indexes serialize to
  /// identical bytes.
  std::string serialize() const;
  /// Throws ValidationError when the stored tokenizer version differs from
  /// `expected_tokenizer_version` (pass an empty view to skip the check).
  static InvertedIndex deserialize(std::string_view data, std::string_view expected_tokenizer_version);

  void save(const std::filesystem::path& path) const;
  static InvertedIndex load(const std::filesystem::path& path, std::string_view expected_tokenizer_version);

 private:
  double term_weight(double idf, std::uint32_t tf, std::uint32_t doc) const;
  void finalize();

  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  std::vector<ArticleKey> doc_keys_;
  double avg_doc_length_ = 0.0;
  Bm25Params params_;
  std::string tokenizer_version_;
};

struct RetrievedArticle {
  std::uint32_t doc = 0;
  ArticleKey key;
  double score = 0.0;
};

/// Analyzes `query` verbatim and returns the top-k articles.
std::vector<RetrievedArticle> retrieve_topk(const InvertedIndex& index, const Analyzer& analyzer,
                                            std::string_view query, std::size_t k);

}  // namespace statqa
