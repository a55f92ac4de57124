#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "statqa/analyzer.hpp"
#include "statqa/bm25.hpp"
#include "statqa/corpus.hpp"
#include "statqa/ensemble.hpp"
#include "statqa/scorer.hpp"

namespace statqa {

struct RetrievalSettings {
  std::size_t candidate_depth = 100;
  NormalizationMode normalization = NormalizationMode::PerQuestion;
  bool allow_empty_answer = false;
  unsigned workers = 1;
};

struct RetrievalResult {
  std::string qid;
  std::vector<ScoredCandidate> ranked;  // fused, best first
  std::vector<ArticleKey> selected;     // score >= theta, in ranked order
};

/// BM25 candidate generation, semantic scoring of the candidate pool and
/// score fusion. Holds references: corpus, index and scorer must outlive it.
class Retriever {
 public:
  Retriever(const Corpus& corpus, const InvertedIndex& index, Analyzer analyzer, ScorerPtr scorer,
            RetrievalSettings settings);

  /// Raw BM25 and semantic scores of the top-`depth` articles (not normalized).
  std::vector<ScoredCandidate> raw_pool(std::string_view qid, std::string_view query,
                                        std::size_t depth) const;

  /// Normalized pools for a batch of questions, in question order.
  std::vector<std::vector<ScoredCandidate>> candidate_pools(std::span<const Question> questions) const;

  RetrievalResult retrieve(std::string_view qid, std::string_view query, const EnsembleParams& params) const;
  RetrievalResult retrieve(std::string_view qid, std::string_view query, const EnsembleParams& params,
                           std::size_t depth) const;
  std::vector<RetrievalResult> retrieve_all(std::span<const Question> questions,
                                            const EnsembleParams& params) const;

  /// Grid search over the labeled questions.
  GridSearchResult tune(std::span<const Question> questions, const GridSearchOptions& options) const;

  const RetrievalSettings& settings() const noexcept { return settings_; }

 private:
  RetrievalResult finish(std::string_view qid, std::vector<ScoredCandidate> pool,
                         const EnsembleParams& params) const;

  const Corpus* corpus_;
  const InvertedIndex* index_;
  Analyzer analyzer_;
  ScorerPtr scorer_;
  RetrievalSettings settings_;
};

/// `{"question_id", "relevant_articles": [...], "candidates": [...]}`;
/// candidates only when requested.
nlohmann::json retrieval_record(const RetrievalResult& result, bool with_candidates);

/// Reads retrieval records back: qid -> ranked article list.
std::vector<std::pair<std::string, std::vector<ArticleKey>>> parse_retrieval_records(std::string_view jsonl);

}  // namespace statqa
