#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "statqa/config.hpp"
#include "statqa/eval.hpp"
#include "statqa/pipeline.hpp"
#include "support/test_support.hpp"

namespace statqa {
namespace {

using nlohmann::json;

struct Fixture {
  Corpus corpus = load_corpus(testing::fixture_dir() / "corpus.json");
  std::vector<Question> questions = load_questions(testing::fixture_dir() / "questions.json");
  Analyzer analyzer;
  InvertedIndex index = InvertedIndex::build(corpus, analyzer);
  json expected = json::parse(testing::slurp(testing::fixture_dir() / "expected.json"));

  Retriever retriever(std::size_t depth, unsigned workers = 1) const {
    return Retriever(corpus, index, analyzer, std::make_shared<BaselineScorer>(),
                     RetrievalSettings{depth, NormalizationMode::PerQuestion, false, workers});
  }
};

TEST(Retriever, AlphaOneFollowsBm25) {
  const Fixture f;
  const auto retriever = f.retriever(f.corpus.size());
  for (const auto& q : f.questions) {
    const auto result = retriever.retrieve(q.question_id, q.text, EnsembleParams{1.0, 0.0});
    const auto tokens = f.analyzer.tokens(q.text);
    const auto hits = f.index.top_k(tokens, f.corpus.size());
    ASSERT_EQ(result.ranked.size(), hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      EXPECT_DOUBLE_EQ(result.ranked[i].bm25_raw, hits[i].score) << q.question_id;
      if (i + 1 < hits.size() && hits[i].score != hits[i + 1].score &&
          (i == 0 || hits[i - 1].score != hits[i].score)) {
        EXPECT_EQ(result.ranked[i].key, f.index.doc_key(hits[i].doc)) << q.question_id;
      }
    }
  }
}

TEST(Retriever, FusedScoresStayInRange) {
  const Fixture f;
  const auto retriever = f.retriever(5);
  for (const auto& q : f.questions) {
    const auto result = retriever.retrieve(q.question_id, q.text, EnsembleParams{0.4, 0.5});
    ASSERT_LE(result.ranked.size(), 5u);
    ASSERT_FALSE(result.selected.empty());
    for (std::size_t i = 0; i < result.ranked.size(); ++i) {
      const auto& c = result.ranked[i];
      EXPECT_GE(c.score, 0.0);
      EXPECT_LE(c.score, 1.0);
      EXPECT_DOUBLE_EQ(c.score, 0.4 * c.bm25 + 0.6 * c.semantic);
      if (i) EXPECT_GE(result.ranked[i - 1].score, c.score);
    }
  }
}

TEST(Retriever, TuneReproducesTheOracle) {
  const Fixture f;
  const auto config = PipelineConfig::from_json(load_config(testing::fixture_dir() / "config.json"),
                                                testing::fixture_dir());
  for (unsigned workers : {1u, 4u}) {
    const auto retriever = f.retriever(config.retrieval.candidate_depth, workers);
    GridSearchOptions options;
    options.step = config.grid_step;
    options.threads = workers;
    const auto tuned = retriever.tune(f.questions, options);
    EXPECT_DOUBLE_EQ(tuned.params.alpha, f.expected["alpha"].get<double>());
    EXPECT_DOUBLE_EQ(tuned.params.theta, f.expected["theta"].get<double>());
    EXPECT_NEAR(tuned.params.achieved_f2, f.expected["f2_macro"].get<double>(), 1e-12);
    EXPECT_EQ(tuned.evaluated_points, 21u * 21u);

    const auto results = retriever.retrieve_all(f.questions, tuned.params);
    for (const auto& r : results) {
      std::vector<ArticleKey> want;
      for (const auto& k : f.expected["predictions"][r.qid]) want.push_back({k[0].get<std::string>(), k[1].get<std::string>()});
      EXPECT_EQ(r.selected, want) << r.qid;
    }
  }
}

TEST(Retriever, RecordsRoundTrip) {
  const Fixture f;
  const auto retriever = f.retriever(3);
  const auto result = retriever.retrieve("q01", f.questions[0].text, EnsembleParams{0.5, 0.2});
  const auto record = retrieval_record(result, true);
  EXPECT_EQ(record["question_id"], "q01");
  EXPECT_EQ(record["candidates"].size(), result.ranked.size());
  const auto parsed = parse_retrieval_records(record.dump() + "\n");
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0].second, result.selected);
}

}  // namespace
}  // namespace statqa
