#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json_fwd.hpp>

#include "statqa/corpus.hpp"

namespace statqa {

struct SpanAnswer {
  std::string text;
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;
  std::size_t token_start = 0;
  std::size_t token_end = 0;  // inclusive
  double score = 0.0;
};

struct YesNoAnswer {
  bool verdict = false;
  double score = 0.0;
  std::string clause_id;  // matched passage
};

/// Which multiple-choice decision rule produced the label.
enum class ChoiceRule {
  Argmax,             // no special choice present
  UniformSpecial,     // all/none-of-the-above: spread within the band
  UniformArgmax,      // all/none-of-the-above present, spread above the band
  BothCorrect,        // pair scores equal and above threshold
  BothBelowOpposing,  // pair scores both below threshold
  PairFallback,       // pair rule undefined: argmax of the pair
};

std::string_view to_string(ChoiceRule rule);

struct ChoiceAnswer {
  std::string label;
  std::map<std::string, double> per_choice_scores;  // non-special choices only
  ChoiceRule rule = ChoiceRule::Argmax;
};

struct Answer {
  std::string qid;
  QuestionType qtype = QuestionType::Factoid;
  std::variant<SpanAnswer, YesNoAnswer, ChoiceAnswer> payload;
};

/// Labels used when rendering yes/no verdicts.
struct AnswerRendering {
  std::string yes_label = "Đúng";
  std::string no_label = "Sai";
};

/// Text span, yes/no label, or choice label.
std::string render_answer(const Answer& answer, const AnswerRendering& rendering = {});

/// `{"question_id": ..., "answer": ...}`
nlohmann::json answer_record(const Answer& answer, const AnswerRendering& rendering = {});

}  // namespace statqa
