#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "statqa/error.hpp"
#include "statqa/eval.hpp"
#include "support/test_support.hpp"

namespace statqa {
namespace {

ArticleKeySet keys(std::initializer_list<const char*> ids) {
  ArticleKeySet out;
  for (const char* id : ids) out.insert({"L", id});
  return out;
}

TEST(F2, HandCases) {
  EXPECT_NEAR(f2_score(0.5, 1.0), 0.8333333333, 1e-9);
  EXPECT_EQ(f2_score(1.0, 1.0), 1.0);
  EXPECT_EQ(f2_score(0.0, 0.0), 0.0);
  EXPECT_NEAR(question_metrics("q", keys({"1", "2"}), keys({"1"})).f2, 5.0 / 6.0, 1e-12);
  EXPECT_EQ(question_metrics("q", keys({"1"}), keys({"2"})).f2, 0.0);
}

TEST(F2, EmptyPredictionHasZeroPrecision) {
  const auto m = question_metrics("q", {}, keys({"1"}));
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f2, 0.0);
}

TEST(ScoreRetrieval, MacroAverage) {
  const RetrievalLabels gold{{"a", keys({"1"})}, {"b", keys({"1", "2"})}};
  const RetrievalLabels exact = gold;
  EXPECT_EQ(score_retrieval(exact, gold).f2_macro, 1.0);

  const RetrievalLabels partial{{"a", keys({"1", "3"})}};  // "b" missing: empty prediction
  const auto r = score_retrieval(partial, gold);
  EXPECT_NEAR(r.f2_macro, (5.0 / 6.0 + 0.0) / 2, 1e-12);
  EXPECT_NEAR(r.precision_macro, 0.25, 1e-12);
  EXPECT_NEAR(r.recall_macro, 0.5, 1e-12);
  ASSERT_EQ(r.per_question.size(), 2u);
}

TEST(ScoreRetrieval, LabelErrors) {
  const RetrievalLabels gold{{"a", keys({"1"})}};
  EXPECT_THROW(score_retrieval({{"zzz", keys({"1"})}}, gold), ValidationError);
  EXPECT_THROW(score_retrieval({}, {{"a", {}}}), ValidationError);
}

std::vector<Question> answer_fixture() {
  return parse_questions(R"([
    {"question_id": "f", "question_type": "factoid", "text": "x", "answer": "06 tháng"},
    {"question_id": "y", "question_type": "Đúng/Sai", "text": "x", "answer": "Đúng"},
    {"question_id": "m", "question_type": "Trắc nghiệm", "text": "x", "choices": ["a", "b", "c"], "answer": "B"},
    {"question_id": "u", "question_type": "factoid", "text": "unlabeled"}
  ])");
}

TEST(ScoreAnswers, RenderedForms) {
  const auto qs = answer_fixture();
  EXPECT_EQ(score_answers({{"f", "  06 THÁNG "}, {"y", "true"}, {"m", "B"}}, qs), 1.0);
  EXPECT_NEAR(score_answers({{"f", "6 tháng"}, {"y", "Sai"}, {"m", "B"}}, qs), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(score_answers({{"m", "B"}}, qs), 1.0 / 3.0, 1e-12);
  EXPECT_THROW(score_answers({{"y", "maybe"}}, qs), ValidationError);
  EXPECT_THROW(score_answers({{"m", "Z"}}, qs), ValidationError);
  EXPECT_THROW(score_answers({{"nope", "x"}}, qs), ValidationError);
}

TEST(ScoreAnswers, SevenOfTen) {
  std::string json = "[";
  std::map<std::string, std::string> predicted;
  for (int i = 0; i < 10; ++i) {
    json += (i ? "," : "") + std::string(R"({"question_id": ")") + std::to_string(i) +
            R"(", "question_type": "yes_no", "text": "x", "answer": true})";
    predicted[std::to_string(i)] = i < 7 ? "Đúng" : "Sai";
  }
  json += "]";
  EXPECT_NEAR(score_answers(predicted, parse_questions(json)), 0.7, 1e-12);
}

TEST(ScoreAnswers, TypedAnswers) {
  const auto qs = answer_fixture();
  std::map<std::string, Answer> answers;
  answers["y"] = Answer{"y", QuestionType::YesNo, YesNoAnswer{true, 0.9, "1"}};
  answers["m"] = Answer{"m", QuestionType::MultipleChoice, ChoiceAnswer{"C", {}, ChoiceRule::Argmax}};
  EXPECT_NEAR(score_answers(answers, qs), 1.0 / 3.0, 1e-12);
  answers["f"] = Answer{"f", QuestionType::YesNo, YesNoAnswer{}};
  EXPECT_THROW(score_answers(answers, qs), ValidationError);
}

TEST(RecallAtK, FixtureAndFullDepth) {
  const Corpus corpus = load_corpus(testing::fixture_dir() / "corpus.json");
  const auto questions = load_questions(testing::fixture_dir() / "questions.json");
  const Analyzer analyzer;
  const auto index = InvertedIndex::build(corpus, analyzer);
  const std::vector<std::size_t> ks{1, 2, 3, 5, 10, corpus.size()};
  const auto r = recall_at_k(index, analyzer, questions, ks);
  const auto expected = nlohmann::json::parse(testing::slurp(testing::fixture_dir() / "expected.json"));
  for (const auto& [k, v] : expected["recall_at_k"].items()) {
    EXPECT_NEAR(r.at(std::stoul(k)), v.get<double>(), 1e-12) << "k=" << k;
  }
  EXPECT_EQ(r.at(corpus.size()), 1.0);
}

TEST(Report, RoundsOnlyAtSerialization) {
  EvalReport report;
  report.per_question.push_back({"q", 1.0 / 3.0, 1.0, f2_score(1.0 / 3.0, 1.0)});
  report.f2_macro = report.per_question[0].f2;
  report.precision_macro = 1.0 / 3.0;
  report.recall_macro = 1.0;
  report.accuracy = 2.0 / 3.0;
  const auto j = report_json(report);
  EXPECT_EQ(j["summary"]["f2_macro"].get<double>(), 0.7143);
  EXPECT_EQ(j["summary"]["accuracy"].get<double>(), 0.6667);
  EXPECT_EQ(j["per_question"][0]["precision"].get<double>(), 0.3333);
  EXPECT_NE(report.f2_macro, 0.7143);
  const std::string csv = report_csv(report);
  EXPECT_NE(csv.find("f2_macro,0.7143"), std::string::npos);
  EXPECT_NE(csv.find("accuracy,0.6667"), std::string::npos);
}

}  // namespace
}  // namespace statqa
