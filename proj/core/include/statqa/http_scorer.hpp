#pragma once

#include <string>
#include <string_view>

#include "statqa/scorer.hpp"

namespace statqa {

/// Client for the scorer HTTP protocol:
///   POST /score_pairs  {task, items:[{id, text_a, text_b}]} -> {scores:[{id, score}]}
///   POST /span_logits  {question, context} -> {start_scores, end_scores, token_offsets}
///   GET  /health       -> {status:"ok", model}
///
/// Large requests are split into batches of `batch_size` and sent with at
/// most `max_in_flight` concurrent calls; results are matched by id.
/// Transport failures (connection errors, timeouts, 429/5xx) are retried
/// with exponential backoff up to `max_attempts`; protocol failures are not.
class HttpScorer final : public Scorer {
 public:
  explicit HttpScorer(std::string base_url, HttpScorerOptions options = {});

  PairScoreResponse score_pairs(const PairScoreRequest& request) const override;
  SpanLogits span_logits(std::string_view question, std::string_view context) const override;
  std::string name() const override { return "http:" + base_url_; }

  struct Health {
    bool ok = false;
    std::string model;
  };
  Health health() const;

 private:
  std::string post_json(const std::string& path, const std::string& body) const;
  PairScoreResponse score_batch(PairTask task, const std::vector<PairItem>& items,
                                std::size_t begin, std::size_t end) const;

  std::string base_url_;
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // optional path below the origin
  HttpScorerOptions options_;
};

}  // namespace statqa
