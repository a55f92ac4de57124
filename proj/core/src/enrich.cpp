#include "statqa/enrich.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "statqa/error.hpp"

namespace statqa {

using nlohmann::json;

namespace {

/// Trims, collapses internal whitespace runs and strips trailing separators.
std::string tidy_name(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  while (!out.empty() && (out.back() == '-' || out.back() == '/' || out.back() == ' ')) out.pop_back();
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, std::string_view what, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    const std::size_t offset = pos;
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json row;
    try {
      row = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
      throw ParseError(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what(),
                       offset + (e.byte > 0 ? e.byte - 1 : 0));
    }
    try {
      fn(row);
    } catch (const json::exception& e) {
      throw ValidationError(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<ReferencePattern> default_reference_patterns() {
  return {{R"(điều\s+(\d+[a-z]?)\s+(?:của\s+|tại\s+|thuộc\s+)?((?:bộ\s+luật|luật|nghị\s+định|thông\s+tư|pháp\s+lệnh|hiến\s+pháp|nghị\s+quyết|quyết\s+định)(?:(?!\s+(?:và\s+|hoặc\s+)?(?:điều|khoản|điểm)\s)[^,.;:()\[\]"\n])*))",
           1, 2}};
}

ReferenceExtractor::ReferenceExtractor(std::vector<ReferencePattern> patterns) : patterns_(std::move(patterns)) {
  for (const auto& p : patterns_) {
    try {
      compiled_.emplace_back(p.pattern, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw ValidationError("bad reference pattern '" + p.pattern + "': " + e.what());
    }
    if (p.article_group < 1 || p.law_group < 1) {
      throw ValidationError("reference pattern groups are 1-based");
    }
  }
}

std::vector<Reference> ReferenceExtractor::extract(std::string_view answer_text) const {
  const std::string folded = fold_case(answer_text);
  // (position, pattern order) keeps the output in text order across patterns.
  std::vector<std::pair<std::size_t, Reference>> found;
  for (std::size_t p = 0; p < compiled_.size(); ++p) {
    const auto& spec = patterns_[p];
    for (auto it = std::sregex_iterator(folded.begin(), folded.end(), compiled_[p]); it != std::sregex_iterator();
         ++it) {
      const auto& m = *it;
      if (static_cast<std::size_t>(spec.article_group) >= m.size() ||
          static_cast<std::size_t>(spec.law_group) >= m.size()) {
        continue;
      }
      Reference ref{tidy_name(m[spec.law_group].str()), tidy_name(m[spec.article_group].str())};
      if (ref.law.empty() || ref.article_id.empty()) continue;
      found.emplace_back(static_cast<std::size_t>(m.position(0)), std::move(ref));
    }
  }
  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Reference> out;
  std::set<Reference> seen;
  for (auto& [_, ref] : found) {
    if (seen.insert(ref).second) out.push_back(std::move(ref));
  }
  return out;
}

std::vector<Reference> extract_references(std::string_view answer_text, const ReferenceExtractor& extractor) {
  return extractor.extract(answer_text);
}

ReferenceResolver::ReferenceResolver(const Corpus& corpus, const std::map<std::string, std::string>& aliases)
    : corpus_(&corpus) {
  for (const auto& law : corpus.law_ids()) by_folded_[tidy_name(fold_case(law))] = law;
  for (const auto& [alias, law] : aliases) by_folded_[tidy_name(fold_case(alias))] = normalize_nfc(law);
}

std::optional<ArticleKey> ReferenceResolver::resolve(const Reference& ref) const {
  const std::string name = tidy_name(fold_case(ref.law));
  std::optional<std::string> law;
  if (auto it = by_folded_.find(name); it != by_folded_.end()) {
    law = it->second;
  } else {
    std::size_t best_len = 0;
    for (const auto& [folded, id] : by_folded_) {
      if (folded.size() > best_len && name.size() > folded.size() && name.starts_with(folded) &&
          name[folded.size()] == ' ') {
        law = id;
        best_len = folded.size();
      }
    }
  }
  if (!law) return std::nullopt;
  ArticleKey key{*law, ref.article_id};
  if (!corpus_->contains(key)) return std::nullopt;
  return key;
}

std::vector<CrawledPair> parse_crawled_dump(std::string_view jsonl) {
  std::vector<CrawledPair> out;
  for_each_line(jsonl, "crawled dump", [&](const json& row) {
    CrawledPair p;
    p.question = normalize_nfc(row.at("question").get<std::string>());
    p.answer = normalize_nfc(row.at("answer").get<std::string>());
    p.source_url = row.value("url", std::string());
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<CrawledPair> load_crawled_dump(const std::filesystem::path& path) {
  return parse_crawled_dump(read_file(path));
}

void EnrichmentConfig::validate() const {
  if (max_question_words_task1 == 0 || max_question_words_task2 == 0 || mlm_max_question_tokens == 0 ||
      mlm_max_total_tokens == 0) {
    throw ValidationError("enrichment limits must be positive");
  }
}

std::vector<CrawledPair> filter_pairs(std::span<const CrawledPair> pairs, const Corpus& corpus,
                                      const EnrichmentConfig& config, EnrichTask task,
                                      const Analyzer& analyzer) {
  config.validate();
  const ReferenceExtractor extractor(config.reference_patterns);
  const ReferenceResolver resolver(corpus, config.law_aliases);
  const std::size_t limit =
      task == EnrichTask::Retrieval ? config.max_question_words_task1 : config.max_question_words_task2;
  std::vector<CrawledPair> kept;
  for (const auto& pair : pairs) {
    if (analyzer.word_count(pair.question) > limit) continue;
    auto refs = extractor.extract(pair.answer);
    if (refs.empty()) continue;
    std::vector<ArticleKey> resolved;
    bool ok = true;
    for (const auto& ref : refs) {
      auto key = resolver.resolve(ref);
      if (!key) {
        ok = false;
        break;
      }
      if (std::find(resolved.begin(), resolved.end(), *key) == resolved.end()) resolved.push_back(*key);
    }
    if (!ok) continue;
    CrawledPair out = pair;
    out.extracted_refs = std::move(refs);
    out.resolved_refs = std::move(resolved);
    kept.push_back(std::move(out));
  }
  return kept;
}

std::vector<YesNoSample> mc_to_yesno(std::span<const Question> questions, const SpecialChoiceDetector& detector) {
  std::vector<YesNoSample> out;
  for (const auto& q : questions) {
    if (q.qtype != QuestionType::MultipleChoice) {
      throw ValidationError("mc_to_yesno: question '" + q.question_id + "' is not multiple-choice");
    }
    if (!q.gold_answer) {
      throw ValidationError("mc_to_yesno: question '" + q.question_id + "' has no gold answer");
    }
    std::set<std::string> special;
    for (const auto& s : detector.detect_all(q)) special.insert(s.label);
    for (const auto& c : q.choices) {
      if (special.contains(c.label)) continue;
      out.push_back({q.question_id, c.label, choice_statement(q, c), c.label == *q.gold_answer});
    }
  }
  return out;
}

std::vector<std::string> build_mlm_subset(std::span<const CrawledPair> pairs, const EnrichmentConfig& config,
                                          const Analyzer& analyzer) {
  config.validate();
  std::vector<std::string> records;
  for (const auto& p : pairs) {
    const std::size_t q = analyzer.word_count(p.question);
    if (q > config.mlm_max_question_tokens) continue;
    if (q + analyzer.word_count(p.answer) > config.mlm_max_total_tokens) continue;
    records.push_back(p.question + " " + p.answer);
  }
  return records;
}

std::vector<FactoidSample> filter_factoid_training(std::span<const FactoidSample> samples) {
  std::vector<FactoidSample> kept;
  for (const auto& s : samples) {
    if (s.answer.empty()) continue;
    const auto pos = s.context.find(s.answer);
    if (pos == std::string::npos) continue;
    FactoidSample k = s;
    k.gold = ByteSpan{pos, pos + s.answer.size()};
    kept.push_back(std::move(k));
  }
  return kept;
}

LengthHistogram length_histogram(std::span<const CrawledPair> pairs, std::size_t bucket_width,
                                 const Analyzer& analyzer) {
  std::vector<std::size_t> lengths;
  lengths.reserve(pairs.size());
  for (const auto& p : pairs) lengths.push_back(analyzer.word_count(p.question));
  return build_histogram(lengths, bucket_width);
}

json to_json_record(const CrawledPair& pair) {
  json refs = json::array();
  for (const auto& r : pair.extracted_refs) refs.push_back({{"law", r.law}, {"article_id", r.article_id}});
  json resolved = json::array();
  for (const auto& k : pair.resolved_refs) resolved.push_back(k);
  return json{{"question", pair.question},
              {"answer", pair.answer},
              {"url", pair.source_url},
              {"extracted_refs", std::move(refs)},
              {"relevant_articles", std::move(resolved)}};
}

json to_json_record(const YesNoSample& sample, std::string_view yes_label, std::string_view no_label) {
  return json{{"source_question_id", sample.source_qid},
              {"choice", sample.choice_label},
              {"text", sample.text},
              {"label", std::string(sample.label ? yes_label : no_label)}};
}

json to_json_record(const FactoidSample& sample) {
  json j = {{"id", sample.id}, {"question", sample.question}, {"context", sample.context}, {"answer", sample.answer}};
  if (sample.gold) {
    j["answer_start"] = sample.gold->begin;
    j["answer_end"] = sample.gold->end;
  }
  return j;
}

std::vector<FactoidSample> parse_factoid_samples(std::string_view jsonl) {
  std::vector<FactoidSample> out;
  for_each_line(jsonl, "factoid samples", [&](const json& row) {
    FactoidSample s;
    s.id = row.value("id", std::to_string(out.size()));
    s.question = normalize_nfc(row.at("question").get<std::string>());
    s.context = normalize_nfc(row.at("context").get<std::string>());
    s.answer = normalize_nfc(row.at("answer").get<std::string>());
    out.push_back(std::move(s));
  });
  return out;
}

}  // namespace statqa
