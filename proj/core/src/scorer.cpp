#include "statqa/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "statqa/error.hpp"
#include "statqa/http_scorer.hpp"

namespace statqa {

using nlohmann::json;

std::string_view to_string(PairTask task) {
  return task == PairTask::Relevance ? "relevance" : "pair_classification";
}

PairTask parse_pair_task(std::string_view name) {
  if (name == "relevance") return PairTask::Relevance;
  if (name == "pair_classification") return PairTask::PairClassification;
  throw ProtocolError("unknown scoring task '" + std::string(name) + "'");
}

void PairScoreRequest::validate() const {
  if (items.empty()) throw ValidationError("pair score request must not be empty");
  std::set<std::string_view> ids;
  for (const auto& item : items) {
    if (!ids.insert(item.id).second) {
      throw ValidationError("duplicate request id '" + item.id + "'");
    }
  }
}

void SpanLogits::validate(std::size_t context_size) const {
  if (start_scores.empty()) throw ProtocolError("span logits are empty");
  if (start_scores.size() != end_scores.size() || start_scores.size() != token_offsets.size()) {
    throw ProtocolError("span logits: start/end/offset lengths differ");
  }
  for (const auto& o : token_offsets) {
    if (o.begin > o.end || o.end > context_size) {
      throw ProtocolError("span logits: token offset outside the context");
    }
  }
  for (std::size_t i = 0; i < start_scores.size(); ++i) {
    if (!std::isfinite(start_scores[i]) || !std::isfinite(end_scores[i])) {
      throw ProtocolError("span logits: non-finite score");
    }
  }
}

PairScoreResponse score_pairs(const Scorer& scorer, const PairScoreRequest& request) {
  request.validate();
  PairScoreResponse response = scorer.score_pairs(request);
  if (response.scores.size() != request.items.size()) {
    throw ProtocolError(scorer.name() + ": expected " + std::to_string(request.items.size()) +
                        " scores, got " + std::to_string(response.scores.size()));
  }
  for (std::size_t i = 0; i < request.items.size(); ++i) {
    const auto& s = response.scores[i];
    if (s.id != request.items[i].id) {
      throw ProtocolError(scorer.name() + ": response id '" + s.id + "' at position " +
                          std::to_string(i) + " does not match request id '" + request.items[i].id + "'");
    }
    if (!(s.score >= 0.0 && s.score <= 1.0)) {
      throw ProtocolError(scorer.name() + ": score for '" + s.id + "' outside [0, 1]");
    }
  }
  return response;
}

SpanLogits span_logits(const Scorer& scorer, std::string_view question, std::string_view context) {
  if (context.empty()) throw ValidationError("span_logits: empty context");
  SpanLogits logits = scorer.span_logits(question, context);
  logits.validate(context.size());
  return logits;
}

std::string relevance_request_id(std::string_view qid, const ArticleKey& key) {
  std::string id(qid);
  id += '|';
  id += key.law_id;
  id += '|';
  id += key.article_id;
  return id;
}

std::string pair_request_id(std::string_view qid, std::string_view key) {
  std::string id(qid);
  if (!key.empty()) {
    id += '|';
    id += key;
  }
  return id;
}

double jaccard_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::unordered_map<std::string_view, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& t : a) ++counts[t].first;
  for (const auto& t : b) ++counts[t].second;
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (const auto& [term, c] : counts) {
    inter += std::min(c.first, c.second);
    uni += std::max(c.first, c.second);
  }
  if (uni == 0) return 0.0;
  return std::clamp(static_cast<double>(inter) / static_cast<double>(uni), 0.0, 1.0);
}

// --- BaselineScorer -------------------------------------------------------

PairScoreResponse BaselineScorer::score_pairs(const PairScoreRequest& request) const {
  PairScoreResponse response;
  response.scores.reserve(request.items.size());
  for (const auto& item : request.items) {
    response.scores.push_back(
        {item.id, jaccard_similarity(analyzer_.tokens(item.text_a), analyzer_.tokens(item.text_b))});
  }
  return response;
}

SpanLogits BaselineScorer::span_logits(std::string_view question, std::string_view context) const {
  const auto q = analyzer_.tokens(question);
  const std::set<std::string> in_question(q.begin(), q.end());
  const TokenStream ctx = analyzer_.analyze(context);
  SpanLogits logits;
  if (ctx.empty()) {
    // No word tokens at all: expose the whole context as a single token.
    logits.start_scores = {0.0};
    logits.end_scores = {0.0};
    logits.token_offsets = {{0, context.size()}};
    return logits;
  }
  const std::size_t n = ctx.size();
  logits.start_scores.assign(n, 0.0);
  logits.end_scores.assign(n, 0.0);
  logits.token_offsets = ctx.offsets;
  for (std::size_t i = 0; i < n; ++i) {
    const bool here = in_question.contains(ctx.tokens[i]);
    if (here) continue;
    if (i > 0 && in_question.contains(ctx.tokens[i - 1])) logits.start_scores[i] = 1.0;
    if (i + 1 == n || in_question.contains(ctx.tokens[i + 1])) logits.end_scores[i] = 1.0;
  }
  return logits;
}

// --- FileScorer -----------------------------------------------------------

namespace {

template <typename Fn>
void for_each_json_line(std::string_view text, std::string_view what, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    const std::size_t line_offset = pos;
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json row;
    try {
      row = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
      throw ParseError(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what(),
                       line_offset + (e.byte > 0 ? e.byte - 1 : 0));
    }
    try {
      fn(row);
    } catch (const json::exception& e) {
      throw ValidationError(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string id_field(const json& row, const char* name) {
  const json& v = row.at(name);
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return normalize_nfc(v.get<std::string>());
}

SpanLogits span_logits_from_json(const json& j) {
  SpanLogits logits;
  logits.start_scores = j.at("start_scores").get<std::vector<double>>();
  logits.end_scores = j.at("end_scores").get<std::vector<double>>();
  for (const json& o : j.at("token_offsets")) {
    logits.token_offsets.push_back({o.at(0).get<std::size_t>(), o.at(1).get<std::size_t>()});
  }
  return logits;
}

}  // namespace

FileScorer FileScorer::parse(std::string_view score_lines, std::string_view span_lines) {
  FileScorer scorer;
  for_each_json_line(score_lines, "score file", [&](const json& row) {
    const std::string qid = id_field(row, "qid");
    const double score = row.at("score").get<double>();
    std::string id;
    if (row.contains("law_id")) {
      id = relevance_request_id(qid, {id_field(row, "law_id"), id_field(row, "article_id")});
    } else {
      id = pair_request_id(qid, row.contains("key") ? id_field(row, "key") : std::string());
    }
    if (!scorer.scores_.emplace(std::move(id), score).second) {
      throw ValidationError("score file: duplicate row for qid '" + qid + "'");
    }
  });
  for_each_json_line(span_lines, "span file", [&](const json& row) {
    scorer.spans_[{normalize_nfc(row.at("question").get<std::string>()),
                   normalize_nfc(row.at("context").get<std::string>())}] = span_logits_from_json(row);
  });
  return scorer;
}

FileScorer FileScorer::load(const std::filesystem::path& scores_path,
                            const std::filesystem::path& spans_path) {
  const std::string scores = scores_path.empty() ? std::string() : read_file(scores_path);
  const std::string spans = spans_path.empty() ? std::string() : read_file(spans_path);
  return parse(scores, spans);
}

PairScoreResponse FileScorer::score_pairs(const PairScoreRequest& request) const {
  PairScoreResponse response;
  response.scores.reserve(request.items.size());
  for (const auto& item : request.items) {
    auto it = scores_.find(item.id);
    if (it == scores_.end()) throw ProtocolError("score file has no entry for '" + item.id + "'");
    response.scores.push_back({item.id, it->second});
  }
  return response;
}

SpanLogits FileScorer::span_logits(std::string_view question, std::string_view context) const {
  auto it = spans_.find({normalize_nfc(question), normalize_nfc(context)});
  if (it == spans_.end()) throw ProtocolError("span file has no entry for this question/context");
  return it->second;
}

// --- combination ----------------------------------------------------------

namespace {

class CombinedScorer final : public Scorer {
 public:
  CombinedScorer(std::vector<ScorerPtr> backends, std::vector<double> weights)
      : backends_(std::move(backends)), weights_(std::move(weights)) {}

  PairScoreResponse score_pairs(const PairScoreRequest& request) const override {
    PairScoreResponse out;
    out.scores.reserve(request.items.size());
    for (const auto& item : request.items) out.scores.push_back({item.id, 0.0});
    for (std::size_t m = 0; m < backends_.size(); ++m) {
      if (weights_[m] == 0.0) continue;
      const auto member = statqa::score_pairs(*backends_[m], request);
      for (std::size_t i = 0; i < out.scores.size(); ++i) {
        out.scores[i].score += weights_[m] * member.scores[i].score;
      }
    }
    for (auto& s : out.scores) s.score = std::clamp(s.score, 0.0, 1.0);
    return out;
  }

  SpanLogits span_logits(std::string_view question, std::string_view context) const override {
    SpanLogits out;
    bool first = true;
    for (std::size_t m = 0; m < backends_.size(); ++m) {
      if (weights_[m] == 0.0) continue;
      const auto member = statqa::span_logits(*backends_[m], question, context);
      if (first) {
        out.token_offsets = member.token_offsets;
        out.start_scores.assign(member.start_scores.size(), 0.0);
        out.end_scores.assign(member.end_scores.size(), 0.0);
        first = false;
      } else if (member.token_offsets != out.token_offsets) {
        throw ProtocolError("combined scorer: members disagree on context tokenization");
      }
      for (std::size_t i = 0; i < out.start_scores.size(); ++i) {
        out.start_scores[i] += weights_[m] * member.start_scores[i];
        out.end_scores[i] += weights_[m] * member.end_scores[i];
      }
    }
    return out;
  }

  std::string name() const override {
    std::ostringstream ss;
    ss << "mix(";
    for (std::size_t m = 0; m < backends_.size(); ++m) {
      if (m) ss << ", ";
      ss << weights_[m] << "@" << backends_[m]->name();
    }
    ss << ")";
    return ss.str();
  }

 private:
  std::vector<ScorerPtr> backends_;
  std::vector<double> weights_;
};

}  // namespace

ScorerPtr combine_scorers(std::vector<ScorerPtr> backends, std::vector<double> weights) {
  if (backends.empty()) throw ValidationError("combine_scorers: no backends");
  if (backends.size() != weights.size()) {
    throw ValidationError("combine_scorers: one weight per backend required");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!backends[i]) throw ValidationError("combine_scorers: null backend");
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw ValidationError("combine_scorers: weights must be non-negative");
    }
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("combine_scorers: weights must sum to 1");
  }
  return std::make_shared<CombinedScorer>(std::move(backends), std::move(weights));
}

ScorerPtr make_scorer(std::string_view selector, const HttpScorerOptions& http_options) {
  if (selector == "baseline") return std::make_shared<BaselineScorer>();
  if (selector.starts_with("file:")) {
    std::string_view rest = selector.substr(5);
    std::string spans;
    if (auto semi = rest.find(";spans="); semi != std::string_view::npos) {
      spans = std::string(rest.substr(semi + 7));
      rest = rest.substr(0, semi);
    }
    return std::make_shared<FileScorer>(FileScorer::load(std::string(rest), spans));
  }
  if (selector.starts_with("http:") || selector.starts_with("https:")) {
    std::string url(selector.starts_with("http:") && !selector.starts_with("http://")
                        ? selector.substr(5)
                        : selector);
    return std::make_shared<HttpScorer>(std::move(url), http_options);
  }
  if (selector.starts_with("mix:")) {
    std::vector<ScorerPtr> members;
    std::vector<double> weights;
    std::string_view rest = selector.substr(4);
    while (!rest.empty()) {
      auto comma = rest.find(',');
      std::string_view entry = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      auto at = entry.find('@');
      if (at == std::string_view::npos) {
        throw ValidationError("mix selector entries look like <weight>@<selector>");
      }
      weights.push_back(std::stod(std::string(entry.substr(0, at))));
      members.push_back(make_scorer(entry.substr(at + 1), http_options));
    }
    return combine_scorers(std::move(members), std::move(weights));
  }
  throw ValidationError("unknown scorer selector '" + std::string(selector) + "'");
}

}  // namespace statqa
