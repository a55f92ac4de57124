#include "statqa/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "statqa/error.hpp"

namespace statqa {

using nlohmann::json;

json default_config() {
  return json{
      {"paths",
       {{"corpus", ""}, {"questions", ""}, {"index", ""}, {"params", ""}, {"type_aliases", ""}, {"stop_words", ""}}},
      {"corpus", {{"prefix_template", std::string(PrefixTemplate::kDefault)}}},
      {"bm25", {{"k1", 1.2}, {"b", 0.75}, {"candidate_depth", 100}}},
      {"scorer",
       {{"backend", "baseline"},
        {"timeout_ms", 30000},
        {"max_attempts", 3},
        {"backoff_initial_ms", 100},
        {"max_in_flight", 4},
        {"batch_size", 32}}},
      {"ensemble", {{"grid_step", 0.01}, {"normalization", "per_question"}, {"allow_empty_answer", false}}},
      {"qa",
       {{"uniform_band", 0.1},
        {"pair_threshold", 0.5},
        {"equality_epsilon", 0.02},
        {"max_span_tokens", 64},
        {"passage_clauses", 1},
        {"yes_label", "Đúng"},
        {"no_label", "Sai"},
        {"context", "retrieved"},
        {"clause_patterns", nullptr},
        {"special_patterns", nullptr}}},
      {"enrich",
       {{"max_question_words_task1", 100},
        {"max_question_words_task2", 128},
        {"mlm_max_question_tokens", 128},
        {"mlm_max_total_tokens", 512},
        {"reference_patterns", nullptr},
        {"law_aliases", json::object()}}},
      {"stats", {{"bucket_width", 50}}},
      {"concurrency", {{"workers", 1}}},
  };
}

namespace {

json* locate(json& config, std::string_view dotted_path) {
  json* node = &config;
  std::size_t pos = 0;
  while (pos <= dotted_path.size()) {
    const auto dot = dotted_path.find('.', pos);
    const std::string key(dotted_path.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos));
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return node;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

void apply_override(json& config, std::string_view dotted_path, std::string_view value) {
  json* node = locate(config, dotted_path);
  if (node == nullptr) throw ValidationError("unknown config field '" + std::string(dotted_path) + "'");
  const std::string field(dotted_path);
  if (node->is_boolean()) {
    if (value == "true" || value == "1") {
      *node = true;
    } else if (value == "false" || value == "0") {
      *node = false;
    } else {
      throw ValidationError(field + ": expected true or false");
    }
  } else if (node->is_number_integer()) {
    long long v = 0;
    if (!parse_number(value, v)) throw ValidationError(field + ": expected an integer");
    *node = v;
  } else if (node->is_number()) {
    double v = 0;
    if (!parse_number(value, v)) throw ValidationError(field + ": expected a number");
    *node = v;
  } else if (node->is_string()) {
    *node = std::string(value);
  } else {
    try {
      *node = json::parse(value.begin(), value.end());
    } catch (const json::parse_error&) {
      throw ValidationError(field + ": expected a JSON value");
    }
  }
}

json load_config(const std::filesystem::path& path) {
  json merged = default_config();
  json file;
  try {
    file = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what(), e.byte);
  }
  if (!file.is_object()) throw ValidationError("config: top level must be an object");
  // Reject typos instead of silently ignoring them.
  std::function<void(const json&, const json&, const std::string&)> check = [&](const json& f, const json& d,
                                                                                const std::string& prefix) {
    for (const auto& [key, value] : f.items()) {
      const std::string path_name = prefix.empty() ? key : prefix + "." + key;
      if (!d.contains(key)) throw ValidationError("unknown config field '" + path_name + "'");
      if (value.is_object() && d.at(key).is_object() && !d.at(key).empty()) check(value, d.at(key), path_name);
    }
  };
  check(file, merged, "");
  merged.merge_patch(file);
  return merged;
}

PipelineConfig PipelineConfig::from_json(const json& config, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  try {
    auto path_of = [&](const char* key) -> std::filesystem::path {
      const std::string p = config.at("paths").at(key).get<std::string>();
      if (p.empty()) return {};
      std::filesystem::path fp(p);
      return fp.is_relative() && !base_dir.empty() ? base_dir / fp : fp;
    };
    c.paths.corpus = path_of("corpus");
    c.paths.questions = path_of("questions");
    c.paths.index = path_of("index");
    c.paths.params = path_of("params");
    c.paths.type_aliases = path_of("type_aliases");
    c.paths.stop_words = path_of("stop_words");

    c.prefix = PrefixTemplate(config.at("corpus").at("prefix_template").get<std::string>());

    const json& bm25 = config.at("bm25");
    c.bm25.k1 = bm25.at("k1").get<double>();
    c.bm25.b = bm25.at("b").get<double>();
    c.bm25.validate();
    const auto depth = bm25.at("candidate_depth").get<long long>();
    if (depth < 1) throw ValidationError("bm25.candidate_depth must be >= 1");
    c.retrieval.candidate_depth = static_cast<std::size_t>(depth);

    const json& scorer = config.at("scorer");
    c.scorer = scorer.at("backend").get<std::string>();
    c.http.timeout_ms = scorer.at("timeout_ms").get<int>();
    c.http.max_attempts = scorer.at("max_attempts").get<int>();
    c.http.backoff_initial_ms = scorer.at("backoff_initial_ms").get<int>();
    c.http.max_in_flight = scorer.at("max_in_flight").get<int>();
    c.http.batch_size = scorer.at("batch_size").get<std::size_t>();
    if (c.http.timeout_ms <= 0 || c.http.max_attempts < 1 || c.http.max_in_flight < 1 || c.http.batch_size < 1 ||
        c.http.backoff_initial_ms < 0) {
      throw ValidationError("scorer: timeouts, attempts, in-flight and batch limits must be positive");
    }

    const json& ens = config.at("ensemble");
    c.grid_step = ens.at("grid_step").get<double>();
    grid_intervals(c.grid_step);
    const std::string norm = ens.at("normalization").get<std::string>();
    if (norm == "per_question") {
      c.retrieval.normalization = NormalizationMode::PerQuestion;
    } else if (norm == "global") {
      c.retrieval.normalization = NormalizationMode::Global;
    } else {
      throw ValidationError("ensemble.normalization must be 'per_question' or 'global'");
    }
    c.retrieval.allow_empty_answer = ens.at("allow_empty_answer").get<bool>();

    const json& qa = config.at("qa");
    c.qa.policy.uniform_band = qa.at("uniform_band").get<double>();
    c.qa.policy.pair_threshold = qa.at("pair_threshold").get<double>();
    c.qa.policy.equality_epsilon = qa.at("equality_epsilon").get<double>();
    if (!qa.at("special_patterns").is_null()) {
      c.qa.policy.special_patterns.clear();
      for (const json& p : qa.at("special_patterns")) {
        c.qa.policy.special_patterns.push_back(
            {parse_special_kind(p.at("kind").get<std::string>()), p.at("pattern").get<std::string>()});
      }
    }
    c.qa.policy.validate();
    SpecialChoiceDetector{c.qa.policy.special_patterns};  // compile once to surface bad patterns early
    const auto span = qa.at("max_span_tokens").get<long long>();
    const auto clauses = qa.at("passage_clauses").get<long long>();
    if (span < 1 || clauses < 1) throw ValidationError("qa.max_span_tokens and qa.passage_clauses must be >= 1");
    c.qa.max_span_tokens = static_cast<std::size_t>(span);
    c.qa.passage_clauses = static_cast<std::size_t>(clauses);
    c.qa.passage_bm25 = c.bm25;
    if (!qa.at("clause_patterns").is_null()) {
      c.qa.segmenter = ClauseSegmenter(qa.at("clause_patterns").get<std::vector<std::string>>());
    }
    c.rendering.yes_label = qa.at("yes_label").get<std::string>();
    c.rendering.no_label = qa.at("no_label").get<std::string>();
    const std::string context = qa.at("context").get<std::string>();
    if (context != "retrieved" && context != "gold") {
      throw ValidationError("qa.context must be 'retrieved' or 'gold'");
    }
    c.qa_use_gold_context = context == "gold";

    const json& en = config.at("enrich");
    c.enrich.max_question_words_task1 = en.at("max_question_words_task1").get<std::size_t>();
    c.enrich.max_question_words_task2 = en.at("max_question_words_task2").get<std::size_t>();
    c.enrich.mlm_max_question_tokens = en.at("mlm_max_question_tokens").get<std::size_t>();
    c.enrich.mlm_max_total_tokens = en.at("mlm_max_total_tokens").get<std::size_t>();
    if (!en.at("reference_patterns").is_null()) {
      c.enrich.reference_patterns.clear();
      for (const json& p : en.at("reference_patterns")) {
        c.enrich.reference_patterns.push_back(
            {p.at("pattern").get<std::string>(), p.value("article_group", 1), p.value("law_group", 2)});
      }
    }
    ReferenceExtractor{c.enrich.reference_patterns};
    c.enrich.law_aliases = en.at("law_aliases").get<std::map<std::string, std::string>>();
    c.enrich.validate();

    const auto width = config.at("stats").at("bucket_width").get<long long>();
    if (width < 1) throw ValidationError("stats.bucket_width must be >= 1");
    c.stats_bucket_width = static_cast<std::size_t>(width);

    const auto workers = config.at("concurrency").at("workers").get<long long>();
    if (workers < 1) throw ValidationError("concurrency.workers must be >= 1");
    c.workers = static_cast<unsigned>(workers);
    c.retrieval.workers = c.workers;

    c.qa.analyzer = c.analyzer();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

Analyzer PipelineConfig::analyzer() const {
  if (paths.stop_words.empty()) return Analyzer{};
  std::unordered_set<std::string> words;
  std::istringstream in(read_file(paths.stop_words));
  for (std::string line; std::getline(in, line);) {
    const std::string folded = fold_case(line);
    const auto first = folded.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    words.insert(folded.substr(first, folded.find_last_not_of(" \t\r") - first + 1));
  }
  return Analyzer(std::move(words));
}

TypeAliasTable PipelineConfig::type_aliases() const {
  return paths.type_aliases.empty() ? TypeAliasTable{} : TypeAliasTable::load(paths.type_aliases);
}

}  // namespace statqa
