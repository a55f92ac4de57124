#include "statqa/pipeline.hpp"

#include <nlohmann/json.hpp>

#include "statqa/error.hpp"
#include "statqa/parallel.hpp"

namespace statqa {

using nlohmann::json;

Retriever::Retriever(const Corpus& corpus, const InvertedIndex& index, Analyzer analyzer, ScorerPtr scorer,
                     RetrievalSettings settings)
    : corpus_(&corpus), index_(&index), analyzer_(std::move(analyzer)), scorer_(std::move(scorer)),
      settings_(settings) {
  if (!scorer_) throw ValidationError("retriever needs a scorer");
  if (settings_.candidate_depth == 0) throw ValidationError("candidate depth must be >= 1");
  if (index.doc_count() != corpus.size()) {
    throw ValidationError("index covers " + std::to_string(index.doc_count()) + " documents but the corpus has " +
                          std::to_string(corpus.size()));
  }
}

std::vector<ScoredCandidate> Retriever::raw_pool(std::string_view qid, std::string_view query,
                                                 std::size_t depth) const {
  const auto hits = retrieve_topk(*index_, analyzer_, query, depth);
  PairScoreRequest request{PairTask::Relevance, {}};
  std::vector<ScoredCandidate> pool;
  pool.reserve(hits.size());
  for (const auto& hit : hits) {
    const Article* article = corpus_->find(hit.key);
    if (article == nullptr) throw ValidationError("index names an article missing from the corpus: " + to_string(hit.key));
    request.items.push_back({relevance_request_id(qid, hit.key), std::string(query), article->text});
    ScoredCandidate c;
    c.qid = std::string(qid);
    c.key = hit.key;
    c.bm25_raw = hit.score;
    pool.push_back(std::move(c));
  }
  const auto response = score_pairs(*scorer_, request);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i].semantic_raw = response.scores[i].score;
  return pool;
}

std::vector<std::vector<ScoredCandidate>> Retriever::candidate_pools(std::span<const Question> questions) const {
  std::vector<std::vector<ScoredCandidate>> pools(questions.size());
  parallel_for(questions.size(), settings_.workers, [&](std::size_t i) {
    pools[i] = raw_pool(questions[i].question_id, questions[i].text, settings_.candidate_depth);
  });
  normalize_pools(pools, settings_.normalization);
  return pools;
}

RetrievalResult Retriever::finish(std::string_view qid, std::vector<ScoredCandidate> pool,
                                  const EnsembleParams& params) const {
  fuse(pool, params.alpha);
  const ArticleKeySet chosen = select(pool, params.theta, settings_.allow_empty_answer);
  RetrievalResult result;
  result.qid = std::string(qid);
  for (const auto& c : pool) {
    if (chosen.contains(c.key)) result.selected.push_back(c.key);
  }
  result.ranked = std::move(pool);
  return result;
}

RetrievalResult Retriever::retrieve(std::string_view qid, std::string_view query, const EnsembleParams& params,
                                    std::size_t depth) const {
  auto pool = raw_pool(qid, query, depth);
  normalize_pool(pool);
  return finish(qid, std::move(pool), params);
}

RetrievalResult Retriever::retrieve(std::string_view qid, std::string_view query,
                                    const EnsembleParams& params) const {
  return retrieve(qid, query, params, settings_.candidate_depth);
}

std::vector<RetrievalResult> Retriever::retrieve_all(std::span<const Question> questions,
                                                     const EnsembleParams& params) const {
  auto pools = candidate_pools(questions);
  std::vector<RetrievalResult> out;
  out.reserve(questions.size());
  for (std::size_t i = 0; i < questions.size(); ++i) {
    out.push_back(finish(questions[i].question_id, std::move(pools[i]), params));
  }
  return out;
}

GridSearchResult Retriever::tune(std::span<const Question> questions, const GridSearchOptions& options) const {
  std::vector<ArticleKeySet> gold;
  for (const auto& q : questions) {
    if (!q.gold_relevant || q.gold_relevant->empty()) {
      throw ValidationError("tune: question '" + q.question_id + "' has no gold articles");
    }
    gold.push_back(*q.gold_relevant);
  }
  const auto pools = candidate_pools(questions);
  return grid_search(pools, gold, options);
}

json retrieval_record(const RetrievalResult& result, bool with_candidates) {
  json selected = json::array();
  for (const auto& key : result.selected) selected.push_back(key);
  json record = {{"question_id", result.qid}, {"relevant_articles", std::move(selected)}};
  if (with_candidates) {
    json candidates = json::array();
    for (const auto& c : result.ranked) candidates.push_back(c);
    record["candidates"] = std::move(candidates);
  }
  return record;
}

std::vector<std::pair<std::string, std::vector<ArticleKey>>> parse_retrieval_records(std::string_view jsonl) {
  std::vector<std::pair<std::string, std::vector<ArticleKey>>> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const std::string_view line = jsonl.substr(pos, nl - pos);
    const std::size_t offset = pos;
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const json row = json::parse(line.begin(), line.end());
      std::vector<ArticleKey> keys;
      for (const json& k : row.at("relevant_articles")) keys.push_back(k.get<ArticleKey>());
      out.emplace_back(row.at("question_id").get<std::string>(), std::move(keys));
    } catch (const json::parse_error& e) {
      throw ParseError("predictions line " + std::to_string(line_no) + ": " + e.what(),
                       offset + (e.byte > 0 ? e.byte - 1 : 0));
    } catch (const json::exception& e) {
      throw ValidationError("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace statqa
