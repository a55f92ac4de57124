#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <csignal>
#include <fstream>
#include <map>
#include <set>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "statqa/enrich.hpp"
#include "statqa/error.hpp"
#include "statqa/eval.hpp"
#include "statqa/parallel.hpp"
#include "statqa/pipeline.hpp"
#include "statqa/qa.hpp"

namespace statqa::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path& require(const fs::path& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("missing ") + what);
  return path;
}

fs::path pick(const fs::path& flag, const fs::path& configured) { return flag.empty() ? configured : flag; }

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out.flush()) throw Error("failed writing " + path.string());
}

std::string jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out += '\n';
  }
  return out;
}

std::string pretty(const json& value) { return value.dump(2) + "\n"; }

Corpus load_configured_corpus(const PipelineConfig& cfg) {
  return load_corpus(require(cfg.paths.corpus, "corpus path (paths.corpus)"), cfg.prefix);
}

std::vector<Question> load_configured_questions(const PipelineConfig& cfg, const fs::path& flag) {
  return load_questions(require(pick(flag, cfg.paths.questions), "questions path (--questions or paths.questions)"),
                        cfg.type_aliases());
}

InvertedIndex obtain_index(const PipelineConfig& cfg, const Corpus& corpus, const Analyzer& analyzer) {
  if (!cfg.paths.index.empty() && fs::exists(cfg.paths.index)) {
    auto index = InvertedIndex::load(cfg.paths.index, analyzer.version());
    if (!(index.params().k1 == cfg.bm25.k1 && index.params().b == cfg.bm25.b)) {
      spdlog::warn("index {} was built with k1={} b={}; config asks for k1={} b={}", cfg.paths.index.string(),
                   index.params().k1, index.params().b, cfg.bm25.k1, cfg.bm25.b);
    }
    return index;
  }
  spdlog::info("no persisted index, building from {} articles", corpus.size());
  return InvertedIndex::build(corpus, analyzer, cfg.bm25);
}

EnsembleParams resolve_params(const PipelineConfig& cfg, std::optional<double> alpha, std::optional<double> theta) {
  EnsembleParams params;
  const bool have_file = !cfg.paths.params.empty() && std::filesystem::exists(cfg.paths.params);
  if (have_file) {
    params = load_params(cfg.paths.params);
  } else if (!alpha || !theta) {
    throw ValidationError("no ensemble parameters at '" + cfg.paths.params.string() +
                          "': run `tune` or pass both --alpha and --theta");
  }
  if (alpha) params.alpha = *alpha;
  if (theta) params.theta = *theta;
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  if (!(params.theta >= 0.0 && params.theta <= 1.0)) throw ValidationError("theta must lie in [0, 1]");
  return params;
}

// Everything retrieval needs; the retriever points into corpus and index.
struct RetrievalStack {
  Corpus corpus;
  Analyzer analyzer;
  InvertedIndex index;
  ScorerPtr scorer;
  std::unique_ptr<Retriever> retriever;

  explicit RetrievalStack(const PipelineConfig& cfg)
      : corpus(load_configured_corpus(cfg)),
        analyzer(cfg.analyzer()),
        index(obtain_index(cfg, corpus, analyzer)),
        scorer(make_scorer(cfg.scorer, cfg.http)) {
    retriever = std::make_unique<Retriever>(corpus, index, analyzer, scorer, cfg.retrieval);
  }
};

std::vector<Question> labeled_only(std::vector<Question> questions) {
  std::erase_if(questions, [](const Question& q) { return !q.gold_relevant || q.gold_relevant->empty(); });
  return questions;
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> ks) {
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

}  // namespace

Context make_context(const std::optional<fs::path>& config_file, const std::vector<std::string>& overrides) {
  Context ctx;
  ctx.raw = config_file ? load_config(*config_file) : default_config();
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    std::string flag = overrides[i];
    if (!flag.starts_with("--")) throw ValidationError("unexpected argument '" + flag + "'");
    flag.erase(0, 2);
    std::string value;
    if (const auto eq = flag.find('='); eq != std::string::npos) {
      value = flag.substr(eq + 1);
      flag.resize(eq);
    } else if (i + 1 < overrides.size()) {
      value = overrides[++i];
    } else {
      throw ValidationError("flag --" + flag + " needs a value");
    }
    if (flag.find('.') == std::string::npos) throw ValidationError("unknown option --" + flag);
    apply_override(ctx.raw, flag, value);
  }
  const fs::path base = config_file ? fs::absolute(*config_file).parent_path() : fs::path{};
  ctx.config = PipelineConfig::from_json(ctx.raw, base);
  return ctx;
}

void run_index(const Context& ctx, const IndexArgs& args) {
  const auto& cfg = ctx.config;
  const fs::path out = require(pick(args.out, cfg.paths.index), "index output (--out or paths.index)");
  const Corpus corpus = load_configured_corpus(cfg);
  const Analyzer analyzer = cfg.analyzer();
  const auto index = InvertedIndex::build(corpus, analyzer, cfg.bm25);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  index.save(out);
  spdlog::info("indexed {} articles, {} terms -> {}", index.doc_count(), index.vocabulary_size(), out.string());
}

void run_retrieve(const Context& ctx, const RetrieveArgs& args) {
  const auto& cfg = ctx.config;
  const fs::path out = require(args.out, "--out");
  const auto questions = load_configured_questions(cfg, args.questions);
  const EnsembleParams params = resolve_params(cfg, args.alpha, args.theta);
  RetrievalStack stack(cfg);
  const auto results = stack.retriever->retrieve_all(questions, params);
  std::vector<json> rows;
  rows.reserve(results.size());
  for (const auto& r : results) rows.push_back(retrieval_record(r, args.with_scores));
  write_text(out, jsonl(rows));
  spdlog::info("retrieved {} questions (alpha={}, theta={}) -> {}", results.size(), params.alpha, params.theta,
               out.string());
}

void run_tune(const Context& ctx, const TuneArgs& args) {
  const auto& cfg = ctx.config;
  const fs::path questions_path = require(pick(args.questions, cfg.paths.questions), "questions path");
  const fs::path out = require(pick(args.out, cfg.paths.params), "params output (--out or paths.params)");
  const auto labeled = labeled_only(load_questions(questions_path, cfg.type_aliases()));
  if (labeled.empty()) throw ValidationError("tune: no question carries gold articles");
  RetrievalStack stack(cfg);
  GridSearchOptions options;
  options.step = cfg.grid_step;
  options.allow_empty_answer = cfg.retrieval.allow_empty_answer;
  options.tuned_on = questions_path.filename().string();
  options.threads = cfg.workers;
  const auto result = stack.retriever->tune(labeled, options);
  save_params(result.params, out);
  spdlog::info("tuned on {} questions over {} grid points: alpha={} theta={} F2={:.4f}", labeled.size(),
               result.evaluated_points, result.params.alpha, result.params.theta, result.params.achieved_f2);
}

void run_qa(const Context& ctx, const QaArgs& args) {
  const auto& cfg = ctx.config;
  const fs::path out = require(args.out, "--out");
  const auto questions = load_configured_questions(cfg, args.questions);
  const Corpus corpus = load_configured_corpus(cfg);
  const ScorerPtr scorer = make_scorer(cfg.scorer, cfg.http);

  std::map<std::string, std::vector<ArticleKey>> context;
  if (cfg.qa_use_gold_context) {
    for (const auto& q : questions) {
      if (!q.gold_relevant) continue;
      context[q.question_id].assign(q.gold_relevant->begin(), q.gold_relevant->end());
    }
  } else if (!args.retrieved.empty()) {
    for (auto& [qid, keys] : parse_retrieval_records(read_file(args.retrieved))) {
      if (!context.emplace(qid, std::move(keys)).second) {
        throw ValidationError("retrieved articles list question '" + qid + "' twice");
      }
    }
  } else {
    const EnsembleParams params = resolve_params(cfg, args.alpha, args.theta);
    const Analyzer analyzer = cfg.analyzer();
    const InvertedIndex index = obtain_index(cfg, corpus, analyzer);
    const Retriever retriever(corpus, index, analyzer, scorer, cfg.retrieval);
    for (auto& r : retriever.retrieve_all(questions, params)) context[r.qid] = std::move(r.selected);
  }

  std::vector<std::vector<const Article*>> articles(questions.size());
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const auto it = context.find(questions[i].question_id);
    if (it == context.end() || it->second.empty()) {
      throw ValidationError("question '" + questions[i].question_id + "' has no context articles");
    }
    for (const auto& key : it->second) {
      const Article* a = corpus.find(key);
      if (a == nullptr) throw ValidationError("context article " + to_string(key) + " is not in the corpus");
      articles[i].push_back(a);
    }
  }

  std::vector<json> rows(questions.size());
  parallel_for(questions.size(), cfg.workers, [&](std::size_t i) {
    rows[i] = answer_record(answer_question(questions[i], articles[i], *scorer, cfg.qa), cfg.rendering);
  });
  write_text(out, jsonl(rows));
  spdlog::info("answered {} questions -> {}", rows.size(), out.string());
}

void run_eval(const Context& ctx, const EvalArgs& args) {
  const auto& cfg = ctx.config;
  if (args.predictions.empty() && args.answers.empty()) {
    throw ValidationError("eval needs --predictions and/or --answers");
  }
  const auto questions = load_configured_questions(cfg, args.questions);
  EvalReport report;
  report.has_retrieval = !args.predictions.empty();
  if (report.has_retrieval) {
    RetrievalLabels predicted;
    for (auto& [qid, keys] : parse_retrieval_records(read_file(args.predictions))) {
      if (predicted.contains(qid)) throw ValidationError("predictions list question '" + qid + "' twice");
      predicted[qid] = ArticleKeySet(keys.begin(), keys.end());
    }
    report = score_retrieval(predicted, gold_labels(questions));
  }
  if (!args.answers.empty()) {
    std::map<std::string, std::string> answers;
    const std::string text = read_file(args.answers);
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) nl = text.size();
      const std::string_view line(text.data() + pos, nl - pos);
      const std::size_t offset = pos;
      pos = nl + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      try {
        const json row = json::parse(line.begin(), line.end());
        const auto qid = row.at("question_id").get<std::string>();
        if (!answers.emplace(qid, row.at("answer").get<std::string>()).second) {
          throw ValidationError("answers list question '" + qid + "' twice");
        }
      } catch (const json::parse_error& e) {
        throw ParseError("answers line " + std::to_string(line_no) + ": " + e.what(), offset);
      } catch (const json::exception& e) {
        throw ValidationError("answers line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    report.accuracy = score_answers(answers, questions);
  }
  if (!args.recall_at.empty()) {
    const Corpus corpus = load_configured_corpus(cfg);
    const Analyzer analyzer = cfg.analyzer();
    const auto index = obtain_index(cfg, corpus, analyzer);
    const auto ks = sorted_unique(args.recall_at);
    report.recall_at_k = recall_at_k(index, analyzer, questions, ks);
  }
  const std::string body = pretty(report_json(report));
  if (args.out.empty()) {
    std::fwrite(body.data(), 1, body.size(), stdout);
  } else {
    write_text(args.out, body);
  }
  if (!args.csv.empty()) write_text(args.csv, report_csv(report));
}

void run_enrich(const Context& ctx, const EnrichArgs& args) {
  const auto& cfg = ctx.config;
  const fs::path dir = require(args.out_dir, "--out-dir");
  if (args.dump.empty() && args.mc_questions.empty() && args.factoid.empty()) {
    throw ValidationError("enrich needs at least one of --dump, --mc-questions, --factoid");
  }
  const Analyzer analyzer = cfg.analyzer();
  json summary = json::object();

  if (!args.dump.empty()) {
    const Corpus corpus = load_configured_corpus(cfg);
    const auto pairs = load_crawled_dump(args.dump);
    const auto task1 = filter_pairs(pairs, corpus, cfg.enrich, EnrichTask::Retrieval, analyzer);
    const auto task2 = filter_pairs(pairs, corpus, cfg.enrich, EnrichTask::QA, analyzer);
    const auto mlm = build_mlm_subset(pairs, cfg.enrich, analyzer);
    std::vector<json> rows;
    for (const auto& p : task1) rows.push_back(to_json_record(p));
    write_text(dir / "task1_pairs.jsonl", jsonl(rows));
    rows.clear();
    for (const auto& p : task2) rows.push_back(to_json_record(p));
    write_text(dir / "task2_pairs.jsonl", jsonl(rows));
    rows.clear();
    for (const auto& text : mlm) rows.push_back(json{{"text", text}});
    write_text(dir / "mlm_subset.jsonl", jsonl(rows));
    write_text(dir / "question_length_histogram.json",
               pretty(json(length_histogram(pairs, cfg.stats_bucket_width, analyzer))));
    write_text(dir / "task1_question_length_histogram.json",
               pretty(json(length_histogram(task1, cfg.stats_bucket_width, analyzer))));
    write_text(dir / "task2_question_length_histogram.json",
               pretty(json(length_histogram(task2, cfg.stats_bucket_width, analyzer))));
    summary["crawled_pairs"] = pairs.size();
    summary["task1_pairs"] = task1.size();
    summary["task2_pairs"] = task2.size();
    summary["mlm_records"] = mlm.size();
  }

  if (!args.mc_questions.empty()) {
    auto questions = load_questions(args.mc_questions, cfg.type_aliases());
    const auto before = questions.size();
    std::erase_if(questions, [](const Question& q) { return q.qtype != QuestionType::MultipleChoice; });
    if (questions.size() != before) {
      spdlog::info("skipping {} non multiple-choice questions", before - questions.size());
    }
    const SpecialChoiceDetector detector(cfg.qa.policy.special_patterns);
    const auto samples = mc_to_yesno(questions, detector);
    std::vector<json> rows;
    for (const auto& s : samples) rows.push_back(to_json_record(s, cfg.rendering.yes_label, cfg.rendering.no_label));
    write_text(dir / "yesno_from_mc.jsonl", jsonl(rows));
    summary["mc_questions"] = questions.size();
    summary["yesno_samples"] = samples.size();
  }

  if (!args.factoid.empty()) {
    const auto samples = parse_factoid_samples(read_file(args.factoid));
    const auto kept = filter_factoid_training(samples);
    std::vector<json> rows;
    for (const auto& s : kept) rows.push_back(to_json_record(s));
    write_text(dir / "factoid_train.jsonl", jsonl(rows));
    summary["factoid_samples"] = samples.size();
    summary["factoid_kept"] = kept.size();
  }

  write_text(dir / "enrich_summary.json", pretty(summary));
  spdlog::info("enrichment outputs -> {}", dir.string());
}

void run_stats(const Context& ctx, const StatsArgs& args) {
  const auto& cfg = ctx.config;
  const Analyzer analyzer = cfg.analyzer();
  LengthHistogram histogram;
  if (args.target == "corpus") {
    histogram = corpus_stats(load_configured_corpus(cfg), analyzer, cfg.stats_bucket_width);
  } else if (args.target == "questions") {
    const auto questions = load_configured_questions(cfg, {});
    std::vector<std::size_t> lengths;
    lengths.reserve(questions.size());
    for (const auto& q : questions) lengths.push_back(analyzer.word_count(q.text));
    histogram = build_histogram(lengths, cfg.stats_bucket_width);
  } else {
    throw ValidationError("stats target must be 'corpus' or 'questions'");
  }
  const std::string body = pretty(json(histogram));
  if (args.out.empty()) {
    std::fwrite(body.data(), 1, body.size(), stdout);
  } else {
    write_text(args.out, body);
  }
}

namespace {
httplib::Server* active_server = nullptr;
extern "C" void stop_server(int) {
  if (active_server != nullptr) active_server->stop();
}
}  // namespace

void run_serve(const Context& ctx, const ServeArgs& args) {
  const auto& cfg = ctx.config;
  const EnsembleParams params = resolve_params(cfg, args.alpha, args.theta);
  RetrievalStack stack(cfg);
  const Retriever& retriever = *stack.retriever;

  httplib::Server server;
  auto reply_error = [](httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
  };
  server.Get("/health", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"ok", true}, {"articles", stack.corpus.size()}, {"scorer", stack.scorer->name()}}.dump(),
                    "application/json");
  });
  server.Get("/search", [&](const httplib::Request& req, httplib::Response& res) {
    const std::string q = req.get_param_value("q");
    if (q.empty()) return reply_error(res, 400, "missing query parameter 'q'");
    std::size_t k = cfg.retrieval.candidate_depth;
    if (req.has_param("k")) {
      const std::string raw = req.get_param_value("k");
      std::size_t parsed = 0;
      const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), parsed);
      if (ec != std::errc() || ptr != raw.data() + raw.size() || parsed == 0) {
        return reply_error(res, 400, "'k' must be a positive integer");
      }
      k = parsed;
    }
    const std::string qid = req.has_param("qid") ? req.get_param_value("qid") : std::string("query");
    try {
      const auto result = retriever.retrieve(qid, q, params, k);
      res.set_content(retrieval_record(result, true).dump(), "application/json");
    } catch (const TransportError& e) {
      reply_error(res, 502, e.what());
    } catch (const ProtocolError& e) {
      reply_error(res, 502, e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });

  if (!server.bind_to_port(args.host, args.port)) {
    throw Error("cannot bind " + args.host + ":" + std::to_string(args.port));
  }
  active_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  spdlog::info("serving {} articles on http://{}:{}/search", stack.corpus.size(), args.host, args.port);
  server.listen_after_bind();
  active_server = nullptr;
}

}  // namespace statqa::cli
