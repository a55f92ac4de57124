#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "statqa/analyzer.hpp"
#include "statqa/corpus.hpp"
#include "statqa/histogram.hpp"
#include "statqa/qa.hpp"

namespace statqa {

/// A citation extracted from free text: law name (case-folded, NFC,
/// whitespace collapsed) and article number.
struct Reference {
  std::string law;
  std::string article_id;

  auto operator<=>(const Reference&) const = default;
  bool operator==(const Reference&) const = default;
};

/// One citation regex, applied to the case-folded text.
struct ReferencePattern {
  std::string pattern;
  int article_group = 1;
  int law_group = 2;
};

/// Matches "Điều <n> <law name>" style citations.
std::vector<ReferencePattern> default_reference_patterns();

class ReferenceExtractor {
 public:
  explicit ReferenceExtractor(std::vector<ReferencePattern> patterns = default_reference_patterns());

  /// Ordered by first appearance, duplicates removed.
  std::vector<Reference> extract(std::string_view answer_text) const;

 private:
  std::vector<ReferencePattern> patterns_;
  std::vector<std::regex> compiled_;
};

std::vector<Reference> extract_references(std::string_view answer_text,
                                          const ReferenceExtractor& extractor = ReferenceExtractor{});

/// Resolves extracted citations to corpus articles. A law name resolves via
/// the alias map, then exact (folded) law id, then the longest corpus law id
/// that is a word prefix of the name.
class ReferenceResolver {
 public:
  ReferenceResolver(const Corpus& corpus, const std::map<std::string, std::string>& aliases = {});

  std::optional<ArticleKey> resolve(const Reference& ref) const;

 private:
  const Corpus* corpus_;
  std::map<std::string, std::string> by_folded_;  // folded name -> law_id
};

struct CrawledPair {
  std::string question;
  std::string answer;
  std::string source_url;
  std::vector<Reference> extracted_refs;
  std::vector<ArticleKey> resolved_refs;  // filled by filter_pairs
};

/// Reads `{"question", "answer", "url"}` JSON Lines.
std::vector<CrawledPair> parse_crawled_dump(std::string_view jsonl);
std::vector<CrawledPair> load_crawled_dump(const std::filesystem::path& path);

struct EnrichmentConfig {
  std::size_t max_question_words_task1 = 100;
  std::size_t max_question_words_task2 = 128;
  std::size_t mlm_max_question_tokens = 128;
  std::size_t mlm_max_total_tokens = 512;
  std::vector<ReferencePattern> reference_patterns = default_reference_patterns();
  std::map<std::string, std::string> law_aliases;

  void validate() const;
};

enum class EnrichTask { Retrieval, QA };

/// Keeps pairs whose question fits the task's word limit and whose answer
/// cites at least one article, every citation resolving in the corpus.
/// Output preserves input order.
std::vector<CrawledPair> filter_pairs(std::span<const CrawledPair> pairs, const Corpus& corpus,
                                      const EnrichmentConfig& config, EnrichTask task,
                                      const Analyzer& analyzer = {});

struct YesNoSample {
  std::string source_qid;
  std::string choice_label;
  std::string text;  // stem + " " + choice text
  bool label = false;
};

/// One sample per non-special choice; the gold choice is the affirmative one.
/// Throws ValidationError for non-multiple-choice input or a missing gold label.
std::vector<YesNoSample> mc_to_yesno(std::span<const Question> questions,
                                     const SpecialChoiceDetector& detector = SpecialChoiceDetector{});

/// Question within mlm_max_question_tokens and question + answer within
/// mlm_max_total_tokens. Records are "question answer".
std::vector<std::string> build_mlm_subset(std::span<const CrawledPair> pairs, const EnrichmentConfig& config,
                                          const Analyzer& analyzer = {});

struct FactoidSample {
  std::string id;
  std::string question;
  std::string context;
  std::string answer;
  std::optional<ByteSpan> gold;  // set by filter_factoid_training
};

/// Keeps samples whose answer occurs verbatim in the context; `gold` is the
/// first occurrence.
std::vector<FactoidSample> filter_factoid_training(std::span<const FactoidSample> samples);

/// Question word-count histogram.
LengthHistogram length_histogram(std::span<const CrawledPair> pairs, std::size_t bucket_width,
                                 const Analyzer& analyzer = {});

nlohmann::json to_json_record(const CrawledPair& pair);
nlohmann::json to_json_record(const YesNoSample& sample, std::string_view yes_label = "Đúng",
                              std::string_view no_label = "Sai");
nlohmann::json to_json_record(const FactoidSample& sample);
std::vector<FactoidSample> parse_factoid_samples(std::string_view jsonl);

}  // namespace statqa
