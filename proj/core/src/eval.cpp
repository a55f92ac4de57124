#include "statqa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "statqa/error.hpp"

namespace statqa {

using nlohmann::json;

double f2_score(double precision, double recall) {
  const double denom = 4.0 * precision + recall;
  if (precision + recall <= 0.0 || denom <= 0.0) return 0.0;
  return 5.0 * precision * recall / denom;
}

PerQuestionMetrics question_metrics(std::string qid, const ArticleKeySet& predicted, const ArticleKeySet& gold) {
  std::size_t hits = 0;
  for (const auto& key : predicted) hits += gold.contains(key) ? 1 : 0;
  PerQuestionMetrics m;
  m.qid = std::move(qid);
  m.precision = predicted.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(predicted.size());
  m.recall = gold.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(gold.size());
  m.f2 = f2_score(m.precision, m.recall);
  return m;
}

EvalReport score_retrieval(const RetrievalLabels& predictions, const RetrievalLabels& gold) {
  for (const auto& [qid, _] : predictions) {
    if (!gold.contains(qid)) throw ValidationError("no gold labels for predicted question '" + qid + "'");
  }
  EvalReport report;
  static const ArticleKeySet kEmpty;
  for (const auto& [qid, gold_set] : gold) {
    if (gold_set.empty()) throw ValidationError("question '" + qid + "' has an empty gold set");
    auto it = predictions.find(qid);
    report.per_question.push_back(question_metrics(qid, it == predictions.end() ? kEmpty : it->second, gold_set));
  }
  if (!report.per_question.empty()) {
    double p = 0.0, r = 0.0, f = 0.0;
    for (const auto& m : report.per_question) {
      p += m.precision;
      r += m.recall;
      f += m.f2;
    }
    const double n = static_cast<double>(report.per_question.size());
    report.precision_macro = p / n;
    report.recall_macro = r / n;
    report.f2_macro = f / n;
  }
  return report;
}

RetrievalLabels gold_labels(std::span<const Question> questions) {
  RetrievalLabels labels;
  for (const auto& q : questions) {
    if (q.gold_relevant) labels[q.question_id] = *q.gold_relevant;
  }
  return labels;
}

namespace {

std::string trimmed_fold(std::string_view s) {
  std::string folded = fold_case(s);
  const auto first = folded.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = folded.find_last_not_of(" \t\r\n");
  return folded.substr(first, last - first + 1);
}

const Question* find_question(std::span<const Question> questions, const std::string& qid) {
  for (const auto& q : questions) {
    if (q.question_id == qid) return &q;
  }
  return nullptr;
}

bool rendered_correct(const Question& q, const std::string& predicted) {
  const std::string& gold = *q.gold_answer;
  switch (q.qtype) {
    case QuestionType::Factoid:
      return trimmed_fold(predicted) == trimmed_fold(gold);
    case QuestionType::YesNo: {
      auto verdict = parse_yes_no(predicted);
      if (!verdict) {
        throw ValidationError("answer '" + predicted + "' for yes/no question '" + q.question_id +
                              "' is not a yes/no label");
      }
      return (*verdict ? "true" : "false") == gold;
    }
    case QuestionType::MultipleChoice:
      if (q.find_choice(predicted) == nullptr) {
        throw ValidationError("answer '" + predicted + "' for question '" + q.question_id +
                              "' is not one of its choice labels");
      }
      return predicted == gold;
  }
  return false;
}

template <typename Predictions, typename Check>
double accuracy_over(const Predictions& predictions, std::span<const Question> questions, Check&& check) {
  for (const auto& [qid, _] : predictions) {
    if (find_question(questions, qid) == nullptr) {
      throw ValidationError("answer for unknown question '" + qid + "'");
    }
  }
  std::size_t total = 0;
  std::size_t correct = 0;
  for (const auto& q : questions) {
    if (!q.gold_answer) continue;
    ++total;
    auto it = predictions.find(q.question_id);
    if (it != predictions.end() && check(q, it->second)) ++correct;
  }
  if (total == 0) throw ValidationError("no questions with gold answers");
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

double score_answers(const std::map<std::string, std::string>& predictions,
                     std::span<const Question> questions) {
  return accuracy_over(predictions, questions, rendered_correct);
}

double score_answers(const std::map<std::string, Answer>& predictions, std::span<const Question> questions) {
  return accuracy_over(predictions, questions, [](const Question& q, const Answer& a) {
    const bool shape_ok =
        a.qtype == q.qtype &&
        ((q.qtype == QuestionType::Factoid && std::holds_alternative<SpanAnswer>(a.payload)) ||
         (q.qtype == QuestionType::YesNo && std::holds_alternative<YesNoAnswer>(a.payload)) ||
         (q.qtype == QuestionType::MultipleChoice && std::holds_alternative<ChoiceAnswer>(a.payload)));
    if (!shape_ok) {
      throw ValidationError("answer for question '" + q.question_id + "' has the wrong type");
    }
    return rendered_correct(q, render_answer(a, AnswerRendering{"true", "false"}));
  });
}

std::map<std::size_t, double> recall_at_k(const InvertedIndex& index, const Analyzer& analyzer,
                                          std::span<const Question> questions,
                                          std::span<const std::size_t> ks) {
  if (ks.empty()) throw ValidationError("recall_at_k: no k values");
  if (!std::is_sorted(ks.begin(), ks.end()) || ks.front() == 0) {
    throw ValidationError("recall_at_k: k values must be positive and ascending");
  }
  std::map<std::size_t, double> sums;
  for (auto k : ks) sums[k] = 0.0;
  std::size_t labeled = 0;
  for (const auto& q : questions) {
    if (!q.gold_relevant || q.gold_relevant->empty()) continue;
    ++labeled;
    const auto ranked = retrieve_topk(index, analyzer, q.text, ks.back());
    for (auto k : ks) {
      std::size_t hits = 0;
      const std::size_t depth = std::min(k, ranked.size());
      for (std::size_t i = 0; i < depth; ++i) hits += q.gold_relevant->contains(ranked[i].key) ? 1 : 0;
      sums[k] += static_cast<double>(hits) / static_cast<double>(q.gold_relevant->size());
    }
  }
  if (labeled == 0) throw ValidationError("recall_at_k: no labeled questions");
  for (auto& [k, v] : sums) v /= static_cast<double>(labeled);
  return sums;
}

namespace {
double round4(double v) { return std::round(v * 10000.0) / 10000.0; }
}  // namespace

json report_json(const EvalReport& report) {
  json per = json::array();
  for (const auto& m : report.per_question) {
    per.push_back({{"question_id", m.qid},
                   {"precision", round4(m.precision)},
                   {"recall", round4(m.recall)},
                   {"f2", round4(m.f2)}});
  }
  json summary = json::object();
  if (report.has_retrieval) {
    summary = {{"questions", report.per_question.size()},
               {"precision_macro", round4(report.precision_macro)},
               {"recall_macro", round4(report.recall_macro)},
               {"f2_macro", round4(report.f2_macro)}};
  }
  if (report.accuracy) summary["accuracy"] = round4(*report.accuracy);
  if (report.recall_at_k) {
    json rk = json::object();
    for (const auto& [k, v] : *report.recall_at_k) rk[std::to_string(k)] = round4(v);
    summary["recall_at_k"] = std::move(rk);
  }
  return json{{"summary", std::move(summary)}, {"per_question", std::move(per)}};
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "metric,value\n";
  if (report.has_retrieval) {
    out << "questions," << report.per_question.size() << "\n";
    out << "precision_macro," << report.precision_macro << "\n";
    out << "recall_macro," << report.recall_macro << "\n";
    out << "f2_macro," << report.f2_macro << "\n";
  }
  if (report.accuracy) out << "accuracy," << *report.accuracy << "\n";
  if (report.recall_at_k) {
    for (const auto& [k, v] : *report.recall_at_k) out << "recall@" << k << "," << v << "\n";
  }
  return out.str();
}

}  // namespace statqa
