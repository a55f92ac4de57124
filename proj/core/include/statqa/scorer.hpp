#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "statqa/analyzer.hpp"
#include "statqa/corpus.hpp"

namespace statqa {

enum class PairTask { Relevance, PairClassification };

std::string_view to_string(PairTask task);
PairTask parse_pair_task(std::string_view name);

struct PairItem {
  std::string id;
  std::string text_a;
  std::string text_b;
};

struct PairScoreRequest {
  PairTask task = PairTask::Relevance;
  std::vector<PairItem> items;

  /// Non-empty batch with unique ids; throws ValidationError otherwise.
  void validate() const;
};

struct PairScore {
  std::string id;
  double score = 0.0;
};

struct PairScoreResponse {
  std::vector<PairScore> scores;
};

/// Start/end scores per context token. Values are unbounded logits; only
/// their ordering matters to span selection.
struct SpanLogits {
  std::vector<double> start_scores;
  std::vector<double> end_scores;
  std::vector<ByteSpan> token_offsets;  // into the context that was sent

  /// Equal, non-zero lengths and offsets inside a context of `context_size`
  /// bytes. Throws ProtocolError.
  void validate(std::size_t context_size) const;
};

/// A semantic relevance / pair classification backend.
/// Implementations must tolerate concurrent calls.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual PairScoreResponse score_pairs(const PairScoreRequest& request) const = 0;
  virtual SpanLogits span_logits(std::string_view question, std::string_view context) const = 0;
  virtual std::string name() const = 0;
};

using ScorerPtr = std::shared_ptr<const Scorer>;

/// Validating entry points. They check the request, call the backend, and
/// reject responses whose ids, order, length or score range break the
/// protocol (ProtocolError).
PairScoreResponse score_pairs(const Scorer& scorer, const PairScoreRequest& request);
SpanLogits span_logits(const Scorer& scorer, std::string_view question, std::string_view context);

/// Request id used for (question, article) relevance pairs: "qid|law_id|article_id".
std::string relevance_request_id(std::string_view qid, const ArticleKey& key);
/// Request id used for pair classification: "qid" or "qid|key".
std::string pair_request_id(std::string_view qid, std::string_view key);

/// Token-multiset Jaccard similarity. Two empty token streams score 0.
double jaccard_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Deterministic stand-in for the neural service.
///
/// Pair score: Jaccard similarity of the two token multisets.
/// Span logits: a context token scores 1 as a start when it is not in the
/// question but directly follows a question token, and 1 as an end when it
/// is not in the question and the next token is either in the question or
/// absent. Everything else scores 0.
class BaselineScorer final : public Scorer {
 public:
  explicit BaselineScorer(Analyzer analyzer = {}) : analyzer_(std::move(analyzer)) {}

  PairScoreResponse score_pairs(const PairScoreRequest& request) const override;
  SpanLogits span_logits(std::string_view question, std::string_view context) const override;
  std::string name() const override { return "baseline"; }

 private:
  Analyzer analyzer_;
};

/// Replays scores recorded in JSON Lines files.
///
/// Score rows: `{"qid", "law_id", "article_id", "score"}` (relevance) or
/// `{"qid", "key", "score"}` (pair classification).
/// Span rows: `{"question", "context", "start_scores", "end_scores", "token_offsets"}`.
class FileScorer final : public Scorer {
 public:
  static FileScorer load(const std::filesystem::path& scores_path,
                         const std::filesystem::path& spans_path = {});
  static FileScorer parse(std::string_view score_lines, std::string_view span_lines = {});

  PairScoreResponse score_pairs(const PairScoreRequest& request) const override;
  SpanLogits span_logits(std::string_view question, std::string_view context) const override;
  std::string name() const override { return "file"; }

  std::size_t score_count() const noexcept { return scores_.size(); }

 private:
  std::map<std::string, double, std::less<>> scores_;
  std::map<std::pair<std::string, std::string>, SpanLogits> spans_;
};

/// Weighted mean of member backends. Weights must be non-negative and sum to
/// 1 within 1e-9; members with weight 0 are never called. Span logits are
/// averaged token-wise and require identical token offsets from all members.
ScorerPtr combine_scorers(std::vector<ScorerPtr> backends, std::vector<double> weights);

struct HttpScorerOptions {
  int timeout_ms = 30000;
  int max_attempts = 3;
  int backoff_initial_ms = 100;  // doubled after each failed attempt
  int max_in_flight = 4;
  std::size_t batch_size = 32;
};

/// Builds a backend from a selector string:
///   `baseline`, `file:<scores.jsonl>[;spans=<spans.jsonl>]`, `http:<url>`,
///   `mix:<w>@<selector>,<w>@<selector>...`
ScorerPtr make_scorer(std::string_view selector, const HttpScorerOptions& http_options = {});

}  // namespace statqa
