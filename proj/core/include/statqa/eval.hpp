#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "statqa/analyzer.hpp"
#include "statqa/answer.hpp"
#include "statqa/bm25.hpp"
#include "statqa/corpus.hpp"

namespace statqa {

struct PerQuestionMetrics {
  std::string qid;
  double precision = 0.0;
  double recall = 0.0;
  double f2 = 0.0;
};

struct EvalReport {
  bool has_retrieval = true;  // false for answer-only reports
  std::vector<PerQuestionMetrics> per_question;
  double f2_macro = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  std::optional<double> accuracy;
  std::optional<std::map<std::size_t, double>> recall_at_k;
};

/// 5PR / (4P + R), or 0 when P + R = 0.
double f2_score(double precision, double recall);

/// Precision is 0 for an empty prediction.
PerQuestionMetrics question_metrics(std::string qid, const ArticleKeySet& predicted, const ArticleKeySet& gold);

using RetrievalLabels = std::map<std::string, ArticleKeySet>;

/// Macro-averaged metrics over every gold question; a gold question without
/// a prediction counts as an empty prediction. Throws ValidationError for a
/// predicted qid missing from `gold` or a gold entry with no articles.
EvalReport score_retrieval(const RetrievalLabels& predictions, const RetrievalLabels& gold);

/// Gold relevance labels of the questions that carry them.
RetrievalLabels gold_labels(std::span<const Question> questions);

/// Fraction of questions answered correctly, over the questions with a gold
/// answer (missing predictions count as wrong). Predictions are rendered
/// answers: span text (compared case-folded and trimmed), yes/no label, or
/// choice label. Throws ValidationError on a prediction whose form does not
/// fit the question type or names an unknown qid.
double score_answers(const std::map<std::string, std::string>& predictions,
                     std::span<const Question> questions);

/// Overload for in-process answers; payload type must match the question type.
double score_answers(const std::map<std::string, Answer>& predictions,
                     std::span<const Question> questions);

/// Macro recall of gold articles inside the BM25 top-k, for each k.
/// Questions without gold labels are skipped.
std::map<std::size_t, double> recall_at_k(const InvertedIndex& index, const Analyzer& analyzer,
                                          std::span<const Question> questions,
                                          std::span<const std::size_t> ks);

/// Report JSON; metric values rounded to 4 decimals here and nowhere else.
nlohmann::json report_json(const EvalReport& report);
/// `metric,value` lines for the summary values.
std::string report_csv(const EvalReport& report);

}  // namespace statqa
