#include "statqa/qa.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "statqa/error.hpp"

namespace statqa {

namespace {

// Absorbs representation error in threshold comparisons (0.55 - 0.45 > 0.1 in binary).
constexpr double kCompareSlack = 1e-12;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string upper_ascii(std::string s) {
  for (auto& c : s) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return s;
}

}  // namespace

// --- clause segmentation --------------------------------------------------

ClauseSegmenter::ClauseSegmenter()
    : ClauseSegmenter({R"(^[ \t]*(\d+)\.[ \t]+)", R"(^[ \t]*([a-z]|đ)\)[ \t]+)"}) {}

ClauseSegmenter::ClauseSegmenter(std::vector<std::string> enumerator_patterns)
    : patterns_(std::move(enumerator_patterns)) {
  for (const auto& p : patterns_) {
    try {
      compiled_.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw ValidationError("bad clause enumerator pattern '" + p + "': " + e.what());
    }
  }
}

std::vector<Clause> ClauseSegmenter::segment(const Article& article) const {
  struct Marker {
    std::size_t line_begin;
    std::size_t marker_end;
    std::string label;
  };
  const std::string& text = article.text;
  std::vector<Marker> markers;
  std::size_t line_begin = 0;
  while (line_begin < text.size()) {
    std::size_t nl = text.find('\n', line_begin);
    const std::size_t line_end = nl == std::string::npos ? text.size() : nl;
    const auto first = text.begin() + static_cast<std::ptrdiff_t>(line_begin);
    const auto last = text.begin() + static_cast<std::ptrdiff_t>(line_end);
    for (const auto& re : compiled_) {
      std::smatch m;
      if (std::regex_search(first, last, m, re, std::regex_constants::match_continuous) &&
          m.size() > 1 && m[1].matched) {
        markers.push_back({line_begin, line_begin + static_cast<std::size_t>(m.length(0)), m[1].str()});
        break;
      }
    }
    if (nl == std::string::npos) break;
    line_begin = nl + 1;
  }

  std::vector<Clause> clauses;
  const ArticleKey parent = article.key();
  if (markers.empty()) {
    clauses.push_back({parent, "0", std::string(trim(text)), {0, text.size()}});
    return clauses;
  }

  std::size_t carry_begin = 0;  // bytes not yet owned by any clause
  const std::string_view preamble = trim(std::string_view(text).substr(0, markers.front().line_begin));
  if (!preamble.empty()) {
    clauses.push_back({parent, "0", std::string(preamble), {0, markers.front().line_begin}});
    carry_begin = markers.front().line_begin;
  }

  std::string current_clause;
  std::set<std::string> used_ids;
  for (const auto& c : clauses) used_ids.insert(c.clause_id);
  for (std::size_t k = 0; k < markers.size(); ++k) {
    const auto& m = markers[k];
    const std::size_t seg_end = k + 1 < markers.size() ? markers[k + 1].line_begin : text.size();
    const std::string_view body = trim(std::string_view(text).substr(m.marker_end, seg_end - m.marker_end));
    std::string id;
    if (all_digits(m.label)) {
      current_clause = m.label;
      id = m.label;
    } else {
      id = current_clause.empty() ? m.label : current_clause + "." + m.label;
    }
    if (body.empty()) {
      // Enumerator with nothing after it: its bytes go to a neighbouring clause.
      if (!clauses.empty()) {
        clauses.back().span.end = seg_end;
        carry_begin = seg_end;
      }
      continue;
    }
    std::string unique = id;
    for (int n = 2; used_ids.contains(unique); ++n) unique = id + "#" + std::to_string(n);
    used_ids.insert(unique);
    clauses.push_back({parent, std::move(unique), std::string(body), {carry_begin, seg_end}});
    carry_begin = seg_end;
  }
  if (clauses.empty()) {
    clauses.push_back({parent, "0", std::string(trim(text)), {0, text.size()}});
  } else {
    clauses.back().span.end = text.size();
  }
  return clauses;
}

std::vector<Clause> segment_clauses(const Article& article, const ClauseSegmenter& segmenter) {
  return segmenter.segment(article);
}

std::vector<std::size_t> match_passages(std::string_view question, std::span<const Clause> clauses,
                                        const Analyzer& analyzer, const Bm25Params& params,
                                        std::size_t n) {
  if (clauses.empty()) throw ValidationError("match_passage: no clauses");
  if (n == 0) throw ValidationError("match_passage: need at least one clause");
  std::vector<std::vector<std::string>> docs;
  docs.reserve(clauses.size());
  for (const auto& c : clauses) docs.push_back(analyzer.tokens(c.text));
  const auto index = InvertedIndex::build(docs, {}, params, analyzer.version());
  const auto query = analyzer.tokens(question);
  std::vector<std::size_t> picked;
  const auto hits = index.top_k(query, n);
  if (!hits.empty() && hits.front().score <= 0.0) {
    // Nothing matched: fall back to the preamble (clause "0") or the first clause.
    for (std::size_t i = 0; i < clauses.size() && picked.size() < n; ++i) picked.push_back(i);
    return picked;
  }
  for (const auto& h : hits) picked.push_back(h.doc);
  std::sort(picked.begin(), picked.end());
  return picked;
}

const Clause& match_passage(std::string_view question, std::span<const Clause> clauses,
                            const Analyzer& analyzer, const Bm25Params& params) {
  if (clauses.empty()) throw ValidationError("match_passage: no clauses");
  return clauses[match_passages(question, clauses, analyzer, params, 1).front()];
}

// --- special choices ------------------------------------------------------

std::string_view to_string(SpecialKind kind) {
  switch (kind) {
    case SpecialKind::AllOfAbove: return "all_of_above";
    case SpecialKind::NoneOfAbove: return "none_of_above";
    case SpecialKind::BothCorrect: return "both_correct";
    case SpecialKind::BothWrong: return "both_wrong";
  }
  return "unknown";
}

SpecialKind parse_special_kind(std::string_view name) {
  if (name == "all_of_above") return SpecialKind::AllOfAbove;
  if (name == "none_of_above") return SpecialKind::NoneOfAbove;
  if (name == "both_correct") return SpecialKind::BothCorrect;
  if (name == "both_wrong") return SpecialKind::BothWrong;
  throw ValidationError("unknown special choice kind '" + std::string(name) + "'");
}

std::vector<SpecialPattern> default_special_patterns() {
  const std::string option = R"((?:đáp án|phương án|lựa chọn|ý|câu trả lời|câu))";
  const std::string pair_ref = R"((?:đáp án\s+|phương án\s+|ý\s+)?([a-d])\s+và\s+(?:đáp án\s+|phương án\s+|ý\s+)?([a-d]))";
  return {
      {SpecialKind::BothCorrect, R"((?:cả\s+)?)" + pair_ref + R"(\s+(?:đều\s+)?(?:đúng|chính xác))"},
      {SpecialKind::BothCorrect, R"(both\s+([a-d])\s+and\s+([a-d])\s+(?:are|is)\s+(?:correct|true|right))"},
      {SpecialKind::BothWrong, R"((?:cả\s+)?)" + pair_ref + R"(\s+(?:đều\s+)?(?:sai|không (?:đúng|chính xác)))"},
      {SpecialKind::BothWrong, R"(both\s+([a-d])\s+and\s+([a-d])\s+(?:are|is)\s+(?:wrong|incorrect|false))"},
      {SpecialKind::NoneOfAbove, R"(không\s+(?:có\s+)?)" + option + R"(\s+nào)"},
      {SpecialKind::NoneOfAbove, R"((?:tất cả|cả)\s+(?:các\s+|ba\s+|bốn\s+)?)" + option + R"(.*(?:đều sai|sai hết))"},
      {SpecialKind::NoneOfAbove, R"(none of the (?:above|answers))"},
      {SpecialKind::AllOfAbove, R"((?:tất cả|cả)\s+(?:các\s+|ba\s+|bốn\s+)?)" + option + R"(.*(?:trên|đều đúng))"},
      {SpecialKind::AllOfAbove, R"(all of the (?:above|answers))"},
  };
}

void ChoicePolicy::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(uniform_band) || !in_unit(pair_threshold) || !in_unit(equality_epsilon)) {
    throw ValidationError("choice policy thresholds must lie in [0, 1]");
  }
}

SpecialChoiceDetector::SpecialChoiceDetector(const std::vector<SpecialPattern>& patterns) {
  for (const auto& p : patterns) {
    try {
      compiled_.emplace_back(p.kind, std::regex(p.pattern, std::regex::ECMAScript | std::regex::optimize));
    } catch (const std::regex_error& e) {
      throw ValidationError("bad special-choice pattern '" + p.pattern + "': " + e.what());
    }
  }
}

std::optional<SpecialChoice> SpecialChoiceDetector::detect(const Choice& choice) const {
  const std::string folded = fold_case(choice.text);
  for (const auto& [kind, re] : compiled_) {
    std::smatch m;
    if (!std::regex_search(folded, m, re)) continue;
    SpecialChoice sc{choice.label, kind, {}};
    if (kind == SpecialKind::BothCorrect || kind == SpecialKind::BothWrong) {
      for (std::size_t g = 1; g < m.size(); ++g) {
        if (m[g].matched && m[g].length() == 1) sc.pair.push_back(upper_ascii(m[g].str()));
      }
    }
    return sc;
  }
  return std::nullopt;
}

std::vector<SpecialChoice> SpecialChoiceDetector::detect_all(const Question& question) const {
  std::vector<SpecialChoice> out;
  bool uniform_family = false;
  bool pair_family = false;
  std::set<SpecialKind> kinds;
  for (const auto& choice : question.choices) {
    auto sc = detect(choice);
    if (!sc) continue;
    if (!kinds.insert(sc->kind).second) {
      throw ValidationError("question '" + question.question_id + "' repeats a '" +
                            std::string(to_string(sc->kind)) + "' choice");
    }
    if (sc->kind == SpecialKind::AllOfAbove || sc->kind == SpecialKind::NoneOfAbove) {
      uniform_family = true;
    } else {
      pair_family = true;
    }
    out.push_back(std::move(*sc));
  }
  if (uniform_family && pair_family) {
    throw ValidationError("question '" + question.question_id +
                          "' mixes all/none-of-the-above with 'both' choices");
  }
  return out;
}

// --- factoid --------------------------------------------------------------

SpanChoice select_span(const SpanLogits& logits, std::size_t max_span_tokens) {
  if (max_span_tokens == 0) throw ValidationError("max_span_tokens must be >= 1");
  const std::size_t n = logits.start_scores.size();
  if (n == 0 || logits.end_scores.size() != n) throw ProtocolError("span logits are empty or uneven");
  SpanChoice best{0, 0, logits.start_scores[0] + logits.end_scores[0]};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t last = std::min(n - 1, i + max_span_tokens - 1);
    for (std::size_t j = i; j <= last; ++j) {
      const double s = logits.start_scores[i] + logits.end_scores[j];
      if (s > best.score) best = {i, j, s};
    }
  }
  return best;
}

Answer answer_factoid(const Question& question, std::string_view context, const Scorer& scorer,
                      std::size_t max_span_tokens) {
  const SpanLogits logits = span_logits(scorer, question.text, context);
  const SpanChoice choice = select_span(logits, max_span_tokens);
  const ByteSpan first = logits.token_offsets[choice.start];
  const ByteSpan last = logits.token_offsets[choice.end];
  if (last.end < first.begin) throw ProtocolError("span logits: token offsets are not monotone");
  SpanAnswer span;
  span.byte_start = first.begin;
  span.byte_end = last.end;
  span.token_start = choice.start;
  span.token_end = choice.end;
  span.text = std::string(context.substr(span.byte_start, span.byte_end - span.byte_start));
  span.score = choice.score;
  return Answer{question.question_id, QuestionType::Factoid, std::move(span)};
}

// --- yes/no ---------------------------------------------------------------

std::pair<std::string, std::string> passage_for(const Question& question,
                                                std::span<const Article* const> articles,
                                                const QaOptions& options) {
  if (articles.empty()) {
    throw ValidationError("question '" + question.question_id + "' has no context article");
  }
  std::vector<Clause> clauses;
  for (const Article* a : articles) {
    auto part = options.segmenter.segment(*a);
    clauses.insert(clauses.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  const auto picked = match_passages(question.text, clauses, options.analyzer, options.passage_bm25,
                                     std::max<std::size_t>(1, options.passage_clauses));
  std::string text;
  std::string ids;
  for (std::size_t i : picked) {
    if (!text.empty()) {
      text += '\n';
      ids += ',';
    }
    text += clauses[i].text;
    ids += clauses[i].clause_id;
  }
  return {std::move(text), std::move(ids)};
}

Answer answer_yes_no(const Question& question, std::span<const Article* const> articles,
                     const Scorer& scorer, const QaOptions& options) {
  options.policy.validate();
  auto [passage, clause_ids] = passage_for(question, articles, options);
  PairScoreRequest request{PairTask::PairClassification,
                           {{pair_request_id(question.question_id, ""), question.text, passage}}};
  const double s = score_pairs(scorer, request).scores.front().score;
  YesNoAnswer yn{s >= options.policy.pair_threshold, s, std::move(clause_ids)};
  return Answer{question.question_id, QuestionType::YesNo, std::move(yn)};
}

// --- multiple choice ------------------------------------------------------

std::string choice_statement(const Question& question, const Choice& choice) {
  return question.text + " " + choice.text;
}

namespace {

/// Highest score; ties go to the choice listed first in the question.
std::string argmax_label(const Question& question, const std::map<std::string, double>& scores,
                         const std::set<std::string>& allowed) {
  std::string best;
  double best_score = 0.0;
  for (const auto& c : question.choices) {
    if (!allowed.contains(c.label)) continue;
    auto it = scores.find(c.label);
    if (it == scores.end()) continue;
    if (best.empty() || it->second > best_score) {
      best = c.label;
      best_score = it->second;
    }
  }
  return best;
}

std::set<std::string> keys_of(const std::map<std::string, double>& scores) {
  std::set<std::string> out;
  for (const auto& [k, _] : scores) out.insert(k);
  return out;
}

}  // namespace

ChoiceAnswer decide_multiple_choice(const Question& question, const std::map<std::string, double>& scores,
                                    std::span<const SpecialChoice> specials, const ChoicePolicy& policy) {
  if (scores.empty()) {
    throw ValidationError("question '" + question.question_id + "' has no scorable choices");
  }
  ChoiceAnswer answer;
  answer.per_choice_scores = scores;
  const auto scored = keys_of(scores);

  const SpecialChoice* all = nullptr;
  const SpecialChoice* none = nullptr;
  const SpecialChoice* both_correct = nullptr;
  const SpecialChoice* both_wrong = nullptr;
  for (const auto& s : specials) {
    switch (s.kind) {
      case SpecialKind::AllOfAbove: all = &s; break;
      case SpecialKind::NoneOfAbove: none = &s; break;
      case SpecialKind::BothCorrect: both_correct = &s; break;
      case SpecialKind::BothWrong: both_wrong = &s; break;
    }
  }

  if (all != nullptr || none != nullptr) {
    double lo = scores.begin()->second;
    double hi = lo;
    double sum = 0.0;
    for (const auto& [_, v] : scores) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    if (hi - lo <= policy.uniform_band + kCompareSlack) {
      const SpecialChoice* pick = all != nullptr ? all : none;
      if (all != nullptr && none != nullptr) {
        pick = sum / static_cast<double>(scores.size()) >= policy.pair_threshold ? all : none;
      }
      answer.label = pick->label;
      answer.rule = ChoiceRule::UniformSpecial;
    } else {
      answer.label = argmax_label(question, scores, scored);
      answer.rule = ChoiceRule::UniformArgmax;
    }
    return answer;
  }

  if (both_correct != nullptr || both_wrong != nullptr) {
    const SpecialChoice& ref = both_correct != nullptr ? *both_correct : *both_wrong;
    std::vector<std::string> pair;
    for (const auto& l : ref.pair) {
      if (scores.contains(l) && std::find(pair.begin(), pair.end(), l) == pair.end()) pair.push_back(l);
    }
    if (pair.size() != 2) {
      // Referenced labels unknown: use the first two scored choices.
      pair.clear();
      for (const auto& c : question.choices) {
        if (scores.contains(c.label) && pair.size() < 2) pair.push_back(c.label);
      }
    }
    const std::set<std::string> pair_set(pair.begin(), pair.end());
    if (pair.size() < 2) {
      answer.label = argmax_label(question, scores, scored);
      answer.rule = ChoiceRule::PairFallback;
      return answer;
    }
    const double s1 = scores.at(pair[0]);
    const double s2 = scores.at(pair[1]);
    const double thr = policy.pair_threshold;
    if (s1 > thr && s2 > thr && std::abs(s1 - s2) <= policy.equality_epsilon + kCompareSlack &&
        both_correct != nullptr) {
      answer.label = both_correct->label;
      answer.rule = ChoiceRule::BothCorrect;
      return answer;
    }
    if (s1 < thr && s2 < thr) {
      if (both_wrong != nullptr) {
        answer.label = both_wrong->label;
        answer.rule = ChoiceRule::BothBelowOpposing;
        return answer;
      }
      std::set<std::string> others;
      for (const auto& l : scored) {
        if (!pair_set.contains(l)) others.insert(l);
      }
      if (!others.empty()) {
        answer.label = argmax_label(question, scores, others);
        answer.rule = ChoiceRule::BothBelowOpposing;
        return answer;
      }
    }
    spdlog::warn("question '{}': pair scores {:.4f}/{:.4f} fit no rule, falling back to the higher one",
                 question.question_id, s1, s2);
    answer.label = argmax_label(question, scores, pair_set);
    answer.rule = ChoiceRule::PairFallback;
    return answer;
  }

  answer.label = argmax_label(question, scores, scored);
  answer.rule = ChoiceRule::Argmax;
  return answer;
}

Answer answer_multiple_choice(const Question& question, std::span<const Article* const> articles,
                              const Scorer& scorer, const QaOptions& options) {
  options.policy.validate();
  if (question.choices.size() < 3 || question.choices.size() > 4) {
    throw ValidationError("question '" + question.question_id + "' needs 3 or 4 choices");
  }
  const SpecialChoiceDetector detector(options.policy.special_patterns);
  const auto specials = detector.detect_all(question);
  std::set<std::string> special_labels;
  for (const auto& s : specials) special_labels.insert(s.label);

  const auto passage = passage_for(question, articles, options).first;
  PairScoreRequest request{PairTask::PairClassification, {}};
  for (const auto& c : question.choices) {
    if (special_labels.contains(c.label)) continue;
    request.items.push_back({pair_request_id(question.question_id, c.label), choice_statement(question, c), passage});
  }
  if (request.items.empty()) {
    throw ValidationError("question '" + question.question_id + "' has only special choices");
  }
  const auto response = score_pairs(scorer, request);
  std::map<std::string, double> scores;
  std::size_t k = 0;
  for (const auto& c : question.choices) {
    if (special_labels.contains(c.label)) continue;
    scores[c.label] = response.scores[k++].score;
  }
  return Answer{question.question_id, QuestionType::MultipleChoice,
                decide_multiple_choice(question, scores, specials, options.policy)};
}

Answer answer_question(const Question& question, std::span<const Article* const> articles,
                       const Scorer& scorer, const QaOptions& options) {
  switch (question.qtype) {
    case QuestionType::Factoid:
      if (articles.empty()) {
        throw ValidationError("question '" + question.question_id + "' has no context article");
      }
      return answer_factoid(question, articles.front()->text, scorer, options.max_span_tokens);
    case QuestionType::YesNo:
      return answer_yes_no(question, articles, scorer, options);
    case QuestionType::MultipleChoice:
      return answer_multiple_choice(question, articles, scorer, options);
  }
  throw ValidationError("question '" + question.question_id + "' has an unknown type");
}

// --- answers --------------------------------------------------------------

std::string_view to_string(ChoiceRule rule) {
  switch (rule) {
    case ChoiceRule::Argmax: return "argmax";
    case ChoiceRule::UniformSpecial: return "uniform_special";
    case ChoiceRule::UniformArgmax: return "uniform_argmax";
    case ChoiceRule::BothCorrect: return "both_correct";
    case ChoiceRule::BothBelowOpposing: return "both_below_opposing";
    case ChoiceRule::PairFallback: return "pair_fallback";
  }
  return "unknown";
}

std::string render_answer(const Answer& answer, const AnswerRendering& rendering) {
  return std::visit(
      [&](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SpanAnswer>) {
          return p.text;
        } else if constexpr (std::is_same_v<T, YesNoAnswer>) {
          return p.verdict ? rendering.yes_label : rendering.no_label;
        } else {
          return p.label;
        }
      },
      answer.payload);
}

nlohmann::json answer_record(const Answer& answer, const AnswerRendering& rendering) {
  return nlohmann::json{{"question_id", answer.qid}, {"answer", render_answer(answer, rendering)}};
}

}  // namespace statqa
