#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "statqa/analyzer.hpp"
#include "statqa/answer.hpp"
#include "statqa/bm25.hpp"
#include "statqa/corpus.hpp"
#include "statqa/scorer.hpp"

namespace statqa {

struct Clause {
  ArticleKey parent;
  std::string clause_id;
  std::string text;  // body without the enumerator, trimmed
  ByteSpan span;     // full segment in the article text, enumerator included
};

/// Splits article text into enumerated clauses and points.
///
/// A line opens a new clause when one of the enumerator patterns matches at
/// its start; capture group 1 is the label. Numeric labels ("1.") become
/// clause ids, letter labels ("a)", "đ)") become points and are qualified
/// with the enclosing clause number ("2.a"). Text before the first
/// enumerator is clause "0". Segment spans tile the article text exactly.
class ClauseSegmenter {
 public:
  ClauseSegmenter();
  explicit ClauseSegmenter(std::vector<std::string> enumerator_patterns);

  std::vector<Clause> segment(const Article& article) const;
  const std::vector<std::string>& patterns() const noexcept { return patterns_; }

 private:
  std::vector<std::string> patterns_;
  std::vector<std::regex> compiled_;
};

std::vector<Clause> segment_clauses(const Article& article, const ClauseSegmenter& segmenter = {});

/// Best clause by BM25 over a throwaway index of `clauses`. Ties go to the
/// earliest clause; when every score is 0 the result is clause "0" (or the
/// first clause when there is no preamble).
const Clause& match_passage(std::string_view question, std::span<const Clause> clauses,
                            const Analyzer& analyzer, const Bm25Params& params = {});

/// Top-n variant: clause indices of the n best clauses, in article order.
std::vector<std::size_t> match_passages(std::string_view question, std::span<const Clause> clauses,
                                        const Analyzer& analyzer, const Bm25Params& params,
                                        std::size_t n);

enum class SpecialKind { AllOfAbove, NoneOfAbove, BothCorrect, BothWrong };

std::string_view to_string(SpecialKind kind);
SpecialKind parse_special_kind(std::string_view name);

/// Regex over the case-folded choice text. Single-letter capture groups name
/// the pair referenced by "both X and Y" options.
struct SpecialPattern {
  SpecialKind kind = SpecialKind::AllOfAbove;
  std::string pattern;
};

/// Vietnamese and English defaults. Earlier patterns take precedence.
std::vector<SpecialPattern> default_special_patterns();

struct ChoicePolicy {
  double uniform_band = 0.1;
  double pair_threshold = 0.5;
  double equality_epsilon = 0.02;
  std::vector<SpecialPattern> special_patterns = default_special_patterns();

  void validate() const;
};

struct SpecialChoice {
  std::string label;
  SpecialKind kind = SpecialKind::AllOfAbove;
  std::vector<std::string> pair;  // referenced labels for the "both" kinds, upper-cased
};

class SpecialChoiceDetector {
 public:
  explicit SpecialChoiceDetector(const std::vector<SpecialPattern>& patterns = default_special_patterns());

  std::optional<SpecialChoice> detect(const Choice& choice) const;

  /// Every special choice of the question. Throws ValidationError when a
  /// question mixes all/none-of-the-above options with "both" options, or
  /// repeats a special kind.
  std::vector<SpecialChoice> detect_all(const Question& question) const;

 private:
  std::vector<std::pair<SpecialKind, std::regex>> compiled_;
};

/// Span (i, j) maximizing start[i] + end[j] with i <= j and j - i < max_span_tokens.
/// Ties resolve to the smallest i, then the smallest j.
struct SpanChoice {
  std::size_t start = 0;
  std::size_t end = 0;
  double score = 0.0;
};
SpanChoice select_span(const SpanLogits& logits, std::size_t max_span_tokens);

struct QaOptions {
  ChoicePolicy policy;
  std::size_t max_span_tokens = 64;
  Bm25Params passage_bm25;
  std::size_t passage_clauses = 1;  // top-n clauses forming the passage
  ClauseSegmenter segmenter;
  Analyzer analyzer;
};

Answer answer_factoid(const Question& question, std::string_view context, const Scorer& scorer,
                      std::size_t max_span_tokens = 64);

/// Matched passage text from the clauses of `articles`.
std::pair<std::string, std::string> passage_for(const Question& question,
                                                std::span<const Article* const> articles,
                                                const QaOptions& options);

Answer answer_yes_no(const Question& question, std::span<const Article* const> articles,
                     const Scorer& scorer, const QaOptions& options = {});

/// Pure decision rules over per-choice scores of the non-special choices.
ChoiceAnswer decide_multiple_choice(const Question& question, const std::map<std::string, double>& scores,
                                    std::span<const SpecialChoice> specials, const ChoicePolicy& policy);

/// "stem + space + choice text"
std::string choice_statement(const Question& question, const Choice& choice);

Answer answer_multiple_choice(const Question& question, std::span<const Article* const> articles,
                              const Scorer& scorer, const QaOptions& options = {});

/// Dispatches on the question type. Factoid questions read the first article.
Answer answer_question(const Question& question, std::span<const Article* const> articles,
                       const Scorer& scorer, const QaOptions& options = {});

}  // namespace statqa
