#include <gtest/gtest.h>

#include "statqa/error.hpp"
#include "statqa/scorer.hpp"
#include "support/test_support.hpp"

namespace statqa {
namespace {

class ConstantScorer final : public Scorer {
 public:
  explicit ConstantScorer(double value) : value_(value) {}
  PairScoreResponse score_pairs(const PairScoreRequest& request) const override {
    ++calls;
    PairScoreResponse r;
    for (const auto& item : request.items) r.scores.push_back({item.id, value_});
    return r;
  }
  SpanLogits span_logits(std::string_view, std::string_view context) const override {
    return {{value_}, {value_}, {{0, context.size()}}};
  }
  std::string name() const override { return "constant"; }
  mutable int calls = 0;

 private:
  double value_;
};

PairScoreRequest one_pair(std::string a, std::string b) {
  return {PairTask::Relevance, {{"q|L|1", std::move(a), std::move(b)}}};
}

TEST(BaselineScorer, IdenticalAndDisjointTexts) {
  const BaselineScorer s;
  EXPECT_EQ(score_pairs(s, one_pair("Thanh niên là công dân", "thanh niên LÀ công dân.")).scores[0].score, 1.0);
  EXPECT_EQ(score_pairs(s, one_pair("kết hôn", "lao động")).scores[0].score, 0.0);
  EXPECT_EQ(score_pairs(s, one_pair("...", "!!")).scores[0].score, 0.0);
}

TEST(BaselineScorer, MultisetJaccard) {
  // {a:2, b:1} vs {a:1, c:1}: intersection 1, union 2 + 1 + 1
  EXPECT_DOUBLE_EQ(jaccard_similarity({"a", "a", "b"}, {"a", "c"}), 0.25);
}

TEST(BaselineScorer, SpanLogitsFollowQuestionTokens) {
  const BaselineScorer s;
  const std::string context = "Thanh niên là công dân từ đủ 16 tuổi";
  const auto logits = span_logits(s, "Thanh niên là công dân", context);
  ASSERT_EQ(logits.start_scores.size(), 9u);
  // "từ" follows "dân" and is new; the run ends at the last token.
  EXPECT_EQ(logits.start_scores[5], 1.0);
  EXPECT_EQ(logits.end_scores[8], 1.0);
  EXPECT_EQ(logits.start_scores[6], 0.0);
  for (const auto& o : logits.token_offsets) EXPECT_LE(o.end, context.size());
}

TEST(BaselineScorer, OneTokenContext) {
  const auto logits = span_logits(BaselineScorer{}, "x", "Tòa");
  EXPECT_EQ(logits.start_scores.size(), 1u);
  EXPECT_EQ(logits.end_scores.size(), 1u);
}

TEST(ScorerValidation, RejectsEmptyAndDuplicateRequests) {
  const BaselineScorer s;
  EXPECT_THROW(score_pairs(s, PairScoreRequest{}), ValidationError);
  PairScoreRequest dup{PairTask::Relevance, {{"a", "x", "y"}, {"a", "x", "z"}}};
  EXPECT_THROW(score_pairs(s, dup), ValidationError);
  EXPECT_THROW(span_logits(s, "q", ""), ValidationError);
}

TEST(RequestIds, Shapes) {
  EXPECT_EQ(relevance_request_id("q1", {"Luật Thanh niên", "2"}), "q1|Luật Thanh niên|2");
  EXPECT_EQ(pair_request_id("q1", ""), "q1");
  EXPECT_EQ(pair_request_id("q1", "B"), "q1|B");
  EXPECT_EQ(parse_pair_task(to_string(PairTask::PairClassification)), PairTask::PairClassification);
  EXPECT_THROW(parse_pair_task("ranking"), ProtocolError);
}

TEST(FileScorer, LooksUpFixtureRows) {
  const auto s = FileScorer::parse(
      "{\"qid\": \"q1\", \"law_id\": \"law-a\", \"article_id\": \"art-1\", \"score\": 0.37}\n"
      "{\"qid\": \"q1\", \"key\": \"B\", \"score\": 0.8}\n"
      "{\"qid\": 7, \"score\": 0.1}\n");
  PairScoreRequest r{PairTask::Relevance, {{relevance_request_id("q1", {"law-a", "art-1"}), "", ""}}};
  EXPECT_EQ(score_pairs(s, r).scores[0].score, 0.37);
  r = {PairTask::PairClassification, {{pair_request_id("q1", "B"), "", ""}, {pair_request_id("7", ""), "", ""}}};
  const auto out = score_pairs(s, r);
  EXPECT_EQ(out.scores[0].score, 0.8);
  EXPECT_EQ(out.scores[1].score, 0.1);
  r = {PairTask::Relevance, {{"missing", "", ""}}};
  EXPECT_THROW(score_pairs(s, r), ProtocolError);
}

TEST(FileScorer, ReplaysRecordedLogits) {
  const auto s = FileScorer::parse(
      "", R"({"question": "Bao lâu?", "context": "nghỉ 06 tháng", "start_scores": [0.1, 2.0, 0.3],)"
          R"( "end_scores": [0.2, 0.1, 1.5], "token_offsets": [[0, 6], [7, 9], [10, 16]]})");
  const auto logits = span_logits(s, "Bao lâu?", "nghỉ 06 tháng");
  EXPECT_EQ(logits.start_scores, (std::vector<double>{0.1, 2.0, 0.3}));
  EXPECT_EQ(logits.end_scores, (std::vector<double>{0.2, 0.1, 1.5}));
  EXPECT_EQ(logits.token_offsets[2], (ByteSpan{10, 16}));
  EXPECT_THROW(span_logits(s, "other", "nghỉ 06 tháng"), ProtocolError);
}

TEST(FileScorer, MalformedRows) {
  EXPECT_THROW(FileScorer::parse("{\"qid\": \"q\", \"score\": }"), ParseError);
  EXPECT_THROW(FileScorer::parse("{\"qid\": \"q\"}"), ValidationError);
  EXPECT_THROW(FileScorer::parse("{\"qid\": \"q\", \"score\": 0.1}\n{\"qid\": \"q\", \"score\": 0.2}"),
               ValidationError);
}

TEST(CombineScorers, IdentityWeights) {
  auto first = std::make_shared<ConstantScorer>(0.3);
  auto second = std::make_shared<ConstantScorer>(0.9);
  const auto mixed = combine_scorers({first, second}, {1.0, 0.0});
  EXPECT_EQ(score_pairs(*mixed, one_pair("a", "b")).scores[0].score, 0.3);
  EXPECT_EQ(second->calls, 0);
}

TEST(CombineScorers, Average) {
  const auto mixed = combine_scorers({std::make_shared<ConstantScorer>(0.2), std::make_shared<ConstantScorer>(0.8)},
                                     {0.5, 0.5});
  EXPECT_DOUBLE_EQ(score_pairs(*mixed, one_pair("a", "b")).scores[0].score, 0.5);
  const auto logits = span_logits(*mixed, "q", "ctx");
  EXPECT_DOUBLE_EQ(logits.start_scores[0], 0.5);
}

TEST(CombineScorers, WeightValidation) {
  auto s = std::make_shared<ConstantScorer>(0.5);
  EXPECT_THROW(combine_scorers({s, s}, {0.5, 0.6}), ValidationError);
  EXPECT_THROW(combine_scorers({s, s}, {1.5, -0.5}), ValidationError);
  EXPECT_THROW(combine_scorers({s}, {0.5, 0.5}), ValidationError);
  EXPECT_THROW(combine_scorers({}, {}), ValidationError);
}

TEST(MakeScorer, Selectors) {
  EXPECT_EQ(make_scorer("baseline")->name(), "baseline");
  testing::TempDir dir;
  testing::spit(dir / "scores.jsonl", "{\"qid\": \"q\", \"score\": 0.4}\n");
  const auto file = make_scorer("file:" + (dir / "scores.jsonl").string());
  EXPECT_EQ(file->name(), "file");
  const auto mixed = make_scorer("mix:0.5@baseline,0.5@file:" + (dir / "scores.jsonl").string());
  PairScoreRequest r{PairTask::PairClassification, {{"q", "same words", "same words"}}};
  EXPECT_DOUBLE_EQ(score_pairs(*mixed, r).scores[0].score, 0.7);
  EXPECT_THROW(make_scorer("neural"), ValidationError);
}

}  // namespace
}  // namespace statqa
