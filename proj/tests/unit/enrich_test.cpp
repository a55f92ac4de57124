#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "statqa/enrich.hpp"
#include "statqa/error.hpp"
#include "support/test_support.hpp"

namespace statqa {
namespace {

using testing::words;

Corpus small_corpus() {
  return Corpus::from_articles({{"Luật Thanh niên", "1", "Thanh niên là công dân.", ""},
                                {"Luật Thanh niên", "2", "Độ tuổi.", ""},
                                {"Bộ luật Lao động", "35", "Quyền đơn phương chấm dứt.", ""}});
}

TEST(ReferenceExtraction, SingleCitation) {
  const auto refs = extract_references("Căn cứ theo Điều 1 Luật Thanh niên năm 2020, thanh niên là...");
  ASSERT_EQ(refs.size(), 1u);
  EXPECT_EQ(refs[0].article_id, "1");
  EXPECT_EQ(refs[0].law, "luật thanh niên năm 2020");
}

TEST(ReferenceExtraction, ExactLawName) {
  const auto refs = extract_references("theo Điều 1 Luật Thanh niên");
  ASSERT_EQ(refs.size(), 1u);
  EXPECT_EQ(refs[0], (Reference{"luật thanh niên", "1"}));
}

TEST(ReferenceExtraction, NoCitation) { EXPECT_TRUE(extract_references("Không có căn cứ pháp lý.").empty()); }

TEST(ReferenceExtraction, OrderAndDuplicates) {
  const auto refs = extract_references(
      "Điều 35 Bộ luật Lao động; Điều 1 Luật Thanh niên; điều 35 bộ luật lao động.");
  ASSERT_EQ(refs.size(), 2u);
  EXPECT_EQ(refs[0], (Reference{"bộ luật lao động", "35"}));
  EXPECT_EQ(refs[1], (Reference{"luật thanh niên", "1"}));
}

TEST(ReferenceExtraction, ConjoinedCitations) {
  const auto refs = extract_references("Điều 1 Luật Thanh niên và Điều 9 Luật Đất đai");
  ASSERT_EQ(refs.size(), 2u);
  EXPECT_EQ(refs[0], (Reference{"luật thanh niên", "1"}));
  EXPECT_EQ(refs[1], (Reference{"luật đất đai", "9"}));
  EXPECT_EQ(extract_references("Điều 8 Luật Hôn nhân và gia đình")[0].law, "luật hôn nhân và gia đình");
}

TEST(ReferenceResolution, PrefixAndAlias) {
  const Corpus corpus = small_corpus();
  const ReferenceResolver resolver(corpus, {{"BLLĐ", "Bộ luật Lao động"}});
  EXPECT_EQ(resolver.resolve({"luật thanh niên năm 2020", "1"}), (ArticleKey{"Luật Thanh niên", "1"}));
  EXPECT_EQ(resolver.resolve({"bllđ", "35"}), (ArticleKey{"Bộ luật Lao động", "35"}));
  EXPECT_FALSE(resolver.resolve({"luật thanh niên", "99"}));
  EXPECT_FALSE(resolver.resolve({"luật đất đai", "1"}));
  EXPECT_FALSE(resolver.resolve({"luật thanh niênxx", "1"}));
}

CrawledPair pair(std::string question, std::string answer = "Theo Điều 1 Luật Thanh niên.") {
  return {std::move(question), std::move(answer), "", {}, {}};
}

TEST(FilterPairs, WordLimitBoundaries) {
  const Corpus corpus = small_corpus();
  const EnrichmentConfig config;
  const std::vector<CrawledPair> pairs{pair(words(100)), pair(words(101)), pair(words(128)), pair(words(129))};
  const auto t1 = filter_pairs(pairs, corpus, config, EnrichTask::Retrieval);
  ASSERT_EQ(t1.size(), 1u);
  EXPECT_EQ(t1[0].question, words(100));
  EXPECT_EQ(t1[0].resolved_refs, (std::vector<ArticleKey>{{"Luật Thanh niên", "1"}}));
  const auto t2 = filter_pairs(pairs, corpus, config, EnrichTask::QA);
  ASSERT_EQ(t2.size(), 3u);
  EXPECT_EQ(t2[2].question, words(128));
}

TEST(FilterPairs, EveryCitationMustResolve) {
  const Corpus corpus = small_corpus();
  const std::vector<CrawledPair> pairs{pair("a", "Không dẫn chiếu."),
                                       pair("b", "Điều 1 Luật Thanh niên và Điều 9 Luật Đất đai."),
                                       pair("c", "Điều 2 Luật Thanh niên, Điều 35 Bộ luật Lao động.")};
  const auto kept = filter_pairs(pairs, corpus, {}, EnrichTask::Retrieval);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].question, "c");
  EXPECT_EQ(kept[0].resolved_refs.size(), 2u);
  const auto record = to_json_record(kept[0]);
  EXPECT_EQ(record["relevant_articles"].size(), 2u);
}

TEST(MlmSubset, TokenBudgets) {
  const std::vector<CrawledPair> pairs{pair(words(100, "q"), words(412, "a")), pair(words(100, "q"), words(413, "a")),
                                       pair(words(129, "q"), words(1, "a")), pair(words(128, "q"), words(1, "a"))};
  const auto records = build_mlm_subset(pairs, {});
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0], words(100, "q") + " " + words(412, "a"));
  EXPECT_EQ(records[1], words(128, "q") + " " + words(1, "a"));
}

Question mcq(std::string id, std::vector<Choice> choices, std::string gold) {
  return Question{std::move(id), QuestionType::MultipleChoice, "Thời hạn là", std::move(choices), {}, std::move(gold)};
}

TEST(McToYesNo, OneAffirmativePerQuestion) {
  const std::vector<Question> qs{mcq("m", {{"A", "30 ngày"}, {"B", "45 ngày"}, {"C", "60 ngày"}, {"D", "90 ngày"}}, "B")};
  const auto samples = mc_to_yesno(qs);
  ASSERT_EQ(samples.size(), 4u);
  std::vector<bool> labels;
  for (const auto& s : samples) labels.push_back(s.label);
  EXPECT_EQ(labels, (std::vector<bool>{false, true, false, false}));
  EXPECT_EQ(samples[1].text, "Thời hạn là 45 ngày");
  EXPECT_EQ(to_json_record(samples[1])["label"], "Đúng");
  EXPECT_EQ(to_json_record(samples[0])["label"], "Sai");
}

TEST(McToYesNo, SpecialChoicesAreSkipped) {
  const std::vector<Question> qs{
      mcq("m1", {{"A", "x"}, {"B", "y"}, {"C", "Cả A và B đều đúng"}}, "A"),
      mcq("m2", {{"A", "Tất cả các đáp án trên"}}, "A"),
  };
  const auto samples = mc_to_yesno(qs);
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(samples[0].choice_label, "A");
  EXPECT_EQ(samples[1].choice_label, "B");
}

TEST(McToYesNo, RejectsBadInput) {
  const std::vector<Question> not_mc{{"f", QuestionType::Factoid, "x", {}, {}, std::string("y")}};
  EXPECT_THROW(mc_to_yesno(not_mc), ValidationError);
  const std::vector<Question> no_gold{{"m", QuestionType::MultipleChoice, "x", {{"A", "a"}}, {}, {}}};
  EXPECT_THROW(mc_to_yesno(no_gold), ValidationError);
}

TEST(FactoidTraining, FirstOccurrence) {
  const std::vector<FactoidSample> samples{{"1", "q", "06 tháng hoặc 06 tháng", "06 tháng", {}},
                                           {"2", "q", "không có", "06 tháng", {}},
                                           {"3", "q", "abc", "", {}}};
  const auto kept = filter_factoid_training(samples);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].gold->begin, 0u);
  EXPECT_EQ(kept[0].gold->end, std::string("06 tháng").size());
  const auto j = to_json_record(kept[0]);
  EXPECT_EQ(j["answer_start"], 0);
}

TEST(FactoidTraining, ParseRoundTrip) {
  const auto parsed = parse_factoid_samples(R"({"id":"a","question":"q","context":"c d","answer":"d"})" "\n\n");
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0].id, "a");
  EXPECT_THROW(parse_factoid_samples("{bad"), ParseError);
  EXPECT_THROW(parse_factoid_samples(R"({"id":"a"})"), ValidationError);
}

TEST(LengthHistogram, Buckets) {
  const std::vector<CrawledPair> pairs{pair(words(10)), pair(words(110))};
  const auto h = length_histogram(pairs, 50);
  EXPECT_EQ(h.buckets, (std::vector<HistogramBucket>{{0, 50, 1}, {100, 150, 1}}));
  EXPECT_EQ(h.total, 2u);
  EXPECT_EQ(h.max, 110u);
  EXPECT_DOUBLE_EQ(h.mean, 60.0);
  EXPECT_DOUBLE_EQ(h.median, 60.0);
}

TEST(LengthHistogram, EmptyAndBoundaries) {
  const auto empty = length_histogram({}, 50);
  EXPECT_TRUE(empty.buckets.empty());
  EXPECT_EQ(empty.total, 0u);
  const std::vector<std::size_t> lengths{49, 50};
  const auto h = build_histogram(lengths, 50);
  EXPECT_EQ(h.buckets, (std::vector<HistogramBucket>{{0, 50, 1}, {50, 100, 1}}));
  EXPECT_THROW(build_histogram(lengths, 0), std::invalid_argument);
}

TEST(CrawledDump, Parse) {
  const auto pairs = parse_crawled_dump(R"({"question":"q","answer":"a","url":"u"})" "\n");
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].source_url, "u");
  EXPECT_THROW(parse_crawled_dump(R"({"question":"q"})"), ValidationError);
}

}  // namespace
}  // namespace statqa
