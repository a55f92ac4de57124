#include <gtest/gtest.h>

#include "statqa/analyzer.hpp"

namespace statqa {
namespace {

TEST(Analyzer, VietnameseCitation) {
  const auto stream = analyze("Điều 1 Luật Thanh niên");
  EXPECT_EQ(stream.tokens, (std::vector<std::string>{"điều", "1", "luật", "thanh", "niên"}));
}

TEST(Analyzer, EmptyText) {
  EXPECT_TRUE(analyze("").empty());
  EXPECT_TRUE(analyze("  ,.;  ").empty());
}

TEST(Analyzer, WordCounts) {
  EXPECT_EQ(word_count("a b c"), 3u);
  EXPECT_EQ(word_count("a, b."), 2u);
  EXPECT_EQ(word_count("Người lao động có quyền gì?"), 6u);
}

TEST(Analyzer, OffsetsPointAtRawBytes) {
  const std::string text = "  Tòa án, ĐIỀU 35!";
  const auto stream = analyze(text);
  ASSERT_EQ(stream.tokens.size(), stream.offsets.size());
  ASSERT_EQ(stream.tokens.size(), 4u);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& off = stream.offsets[i];
    ASSERT_LE(off.end, text.size());
    EXPECT_EQ(fold_case(normalize_nfc(text.substr(off.begin, off.end - off.begin))), stream.tokens[i]);
  }
  EXPECT_EQ(text.substr(stream.offsets[2].begin, stream.offsets[2].end - stream.offsets[2].begin), "ĐIỀU");
}

TEST(Analyzer, DecomposedInputMatchesComposed) {
  // "Việt" with the tone marks as combining code points.
  const std::string decomposed = "Vi\x65\xcc\xa3\xcc\x82t";
  EXPECT_EQ(analyze(decomposed).tokens, analyze("Việt").tokens);
  EXPECT_EQ(analyze(decomposed).tokens, (std::vector<std::string>{"việt"}));
}

TEST(Analyzer, Idempotent) {
  const std::string text = "Nam từ đủ 20 tuổi trở lên, NỮ từ đủ 18 tuổi";
  const auto once = analyze(text).tokens;
  std::string joined;
  for (const auto& t : once) joined += t + " ";
  EXPECT_EQ(analyze(joined).tokens, once);
  EXPECT_EQ(analyze(text).tokens, once);
}

TEST(Analyzer, StopWordsAreDroppedAndVersioned) {
  const Analyzer plain;
  const Analyzer stopping({"của", "và"});
  EXPECT_EQ(stopping.tokens("quyền và nghĩa vụ của thanh niên"),
            (std::vector<std::string>{"quyền", "nghĩa", "vụ", "thanh", "niên"}));
  EXPECT_EQ(plain.version(), std::string(kTokenizerVersion));
  EXPECT_NE(stopping.version(), plain.version());
}

}  // namespace
}  // namespace statqa
