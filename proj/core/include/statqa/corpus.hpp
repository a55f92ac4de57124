#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "statqa/analyzer.hpp"
#include "statqa/histogram.hpp"

namespace statqa {

/// Identity of one statute article.
struct ArticleKey {
  std::string law_id;
  std::string article_id;

  auto operator<=>(const ArticleKey&) const = default;
  bool operator==(const ArticleKey&) const = default;
};

using ArticleKeySet = std::set<ArticleKey>;

std::string to_string(const ArticleKey& key);

struct Article {
  std::string law_id;
  std::string article_id;
  std::string text;
  std::string prefixed_text;  // rendered index prefix + " " + text

  ArticleKey key() const { return {law_id, article_id}; }
};

/// Renders the article index that is prepended to article text before
/// lexical indexing. Placeholders: `{article_id}`, `{law_id}`.
class PrefixTemplate {
 public:
  static constexpr std::string_view kDefault = "Điều {article_id} {law_id}";

  PrefixTemplate() : PrefixTemplate(std::string(kDefault)) {}
  explicit PrefixTemplate(std::string pattern);

  std::string render(std::string_view law_id, std::string_view article_id) const;
  const std::string& pattern() const noexcept { return pattern_; }

 private:
  std::string pattern_;
};

/// Immutable, ordered collection of articles with (law_id, article_id) lookup.
class Corpus {
 public:
  Corpus() = default;

  /// Validates uniqueness and non-empty text, fills `prefixed_text`.
  /// Strings are NFC-normalized.
  static Corpus from_articles(std::vector<Article> articles,
                              const PrefixTemplate& prefix = PrefixTemplate{});

  std::size_t size() const noexcept { return articles_.size(); }
  bool empty() const noexcept { return articles_.empty(); }
  const Article& operator[](std::size_t ordinal) const { return articles_.at(ordinal); }
  const std::vector<Article>& articles() const noexcept { return articles_; }
  auto begin() const { return articles_.begin(); }
  auto end() const { return articles_.end(); }

  const Article* find(const ArticleKey& key) const;
  std::optional<std::size_t> ordinal(const ArticleKey& key) const;
  bool contains(const ArticleKey& key) const { return ordinal(key).has_value(); }

  /// Distinct law ids in first-appearance order.
  std::vector<std::string> law_ids() const;

  const PrefixTemplate& prefix() const noexcept { return prefix_; }

 private:
  std::vector<Article> articles_;
  std::map<ArticleKey, std::size_t> by_key_;
  PrefixTemplate prefix_;
};

Corpus parse_corpus(std::string_view json_text, const PrefixTemplate& prefix = PrefixTemplate{});
Corpus load_corpus(const std::filesystem::path& path,
                   const PrefixTemplate& prefix = PrefixTemplate{});

/// Inverse of parse_corpus: laws in first-appearance order, articles in corpus order.
std::string serialize_corpus(const Corpus& corpus);

/// Union of several independently loaded corpora. Duplicate keys are rejected.
Corpus merge_corpora(const std::vector<Corpus>& parts, const PrefixTemplate& prefix = PrefixTemplate{});

enum class QuestionType { Factoid, YesNo, MultipleChoice };

std::string_view to_string(QuestionType type);

struct Choice {
  std::string label;
  std::string text;
};

struct Question {
  std::string question_id;
  QuestionType qtype = QuestionType::Factoid;
  std::string text;
  std::vector<Choice> choices;           // non-empty iff MultipleChoice
  std::optional<ArticleKeySet> gold_relevant;
  std::optional<std::string> gold_answer;  // YesNo: canonical "true"/"false"

  const Choice* find_choice(std::string_view label) const;
};

/// Maps dataset-specific question-type strings to canonical types.
/// Lookup is case-folded and NFC-normalized.
class TypeAliasTable {
 public:
  /// Canonical names plus the Vietnamese competition labels.
  TypeAliasTable();

  void add(std::string_view alias, QuestionType type);
  std::optional<QuestionType> lookup(std::string_view alias) const;

  /// `{"<alias>": "factoid" | "yes_no" | "multiple_choice", ...}`; entries are
  /// added on top of the defaults.
  static TypeAliasTable load(const std::filesystem::path& path);
  static TypeAliasTable parse(std::string_view json_text);

 private:
  std::map<std::string, QuestionType> aliases_;
};

/// Parses a yes/no label ("Đúng", "Sai", "true", "no", ...). nullopt when unknown.
std::optional<bool> parse_yes_no(std::string_view text);

std::vector<Question> parse_questions(std::string_view json_text,
                                      const TypeAliasTable& aliases = TypeAliasTable{});
std::vector<Question> load_questions(const std::filesystem::path& path,
                                     const TypeAliasTable& aliases = TypeAliasTable{});

using CorpusStats = LengthHistogram;

/// Token-count histogram of article text (not the prefixed text).
CorpusStats corpus_stats(const Corpus& corpus, const Analyzer& analyzer,
                         std::size_t bucket_width = 50);

void to_json(nlohmann::json& j, const ArticleKey& key);
void from_json(const nlohmann::json& j, ArticleKey& key);

std::string read_file(const std::filesystem::path& path);

}  // namespace statqa
