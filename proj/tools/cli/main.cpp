// statqa command line: index, retrieve, tune, qa, eval, enrich, stats, serve.
//
// Any config field can be set with a flag of the same dotted name, e.g.
//   statqa retrieve --config run.json --bm25.k1=1.5 --ensemble.normalization global

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "statqa/error.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Alpha/theta flags shared by the commands that fuse scores.
void add_param_flags(CLI::App* cmd, std::optional<double>& alpha, std::optional<double>& theta) {
  cmd->add_option("--alpha", alpha, "BM25 weight, overrides the params file")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--theta", theta, "selection threshold, overrides the params file")->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int main(int argc, char** argv) {
  using namespace statqa::cli;

  spdlog::set_default_logger(spdlog::stderr_color_mt("statqa"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Legal article retrieval and question answering"};
  app.require_subcommand(1);
  app.allow_extras();

  std::optional<std::string> config_path;
  std::optional<std::string> scorer;
  std::string log_level = "info";
  app.add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--scorer", scorer, "baseline | file:<scores.jsonl>[;spans=<spans.jsonl>] | http:<url> | mix:...");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");
  app.set_version_flag("--version", "statqa 0.1.0");

  IndexArgs index_args;
  auto* index_cmd = app.add_subcommand("index", "build and persist the BM25 index");
  index_cmd->add_option("-o,--out", index_args.out, "index file (default paths.index)");

  RetrieveArgs retrieve_args;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "questions -> predicted relevant articles (JSONL)");
  retrieve_cmd->add_option("-q,--questions", retrieve_args.questions, "questions file (default paths.questions)");
  retrieve_cmd->add_option("-o,--out", retrieve_args.out, "predictions JSONL")->required();
  retrieve_cmd->add_flag("--with-scores", retrieve_args.with_scores, "include the scored candidate pool");
  add_param_flags(retrieve_cmd, retrieve_args.alpha, retrieve_args.theta);

  TuneArgs tune_args;
  auto* tune_cmd = app.add_subcommand("tune", "grid search alpha and theta on labeled questions");
  tune_cmd->add_option("-q,--questions", tune_args.questions, "labeled questions (default paths.questions)");
  tune_cmd->add_option("-o,--out", tune_args.out, "params JSON (default paths.params)");

  QaArgs qa_args;
  auto* qa_cmd = app.add_subcommand("qa", "answer questions from retrieved or gold articles");
  qa_cmd->add_option("-q,--questions", qa_args.questions, "questions file (default paths.questions)");
  qa_cmd->add_option("-r,--retrieved", qa_args.retrieved, "predictions JSONL from `retrieve`");
  qa_cmd->add_option("-o,--out", qa_args.out, "answers JSONL")->required();
  add_param_flags(qa_cmd, qa_args.alpha, qa_args.theta);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "score predictions and answers against gold labels");
  eval_cmd->add_option("-q,--questions", eval_args.questions, "gold questions (default paths.questions)");
  eval_cmd->add_option("-p,--predictions", eval_args.predictions, "predictions JSONL");
  eval_cmd->add_option("-a,--answers", eval_args.answers, "answers JSONL");
  eval_cmd->add_option("-o,--out", eval_args.out, "report JSON (default stdout)");
  eval_cmd->add_option("--csv", eval_args.csv, "summary CSV");
  eval_cmd->add_option("--recall-at", eval_args.recall_at, "BM25 recall@k cutoffs")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);

  EnrichArgs enrich_args;
  auto* enrich_cmd = app.add_subcommand("enrich", "filter crawled data and derive training sets");
  enrich_cmd->add_option("--dump", enrich_args.dump, "crawled question/answer JSONL");
  enrich_cmd->add_option("--mc-questions", enrich_args.mc_questions, "multiple-choice questions to expand");
  enrich_cmd->add_option("--factoid", enrich_args.factoid, "factoid samples JSONL");
  enrich_cmd->add_option("-o,--out-dir", enrich_args.out_dir, "output directory")->required();

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "length histogram JSON");
  stats_cmd->add_option("target", stats_args.target, "corpus | questions")
      ->check(CLI::IsMember({"corpus", "questions"}));
  stats_cmd->add_option("-o,--out", stats_args.out, "output file (default stdout)");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP retrieval endpoint: GET /search?q=...&k=...");
  serve_cmd->add_option("--host", serve_args.host, "bind address");
  serve_cmd->add_option("--port", serve_args.port, "port")->check(CLI::Range(1, 65535));
  add_param_flags(serve_cmd, serve_args.alpha, serve_args.theta);

  for (auto* cmd : {index_cmd, retrieve_cmd, tune_cmd, qa_cmd, eval_cmd, enrich_cmd, stats_cmd, serve_cmd}) {
    cmd->allow_extras();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    spdlog::set_level(spdlog::level::from_str(log_level));
    std::vector<std::string> overrides = app.remaining();
    if (scorer) {
      overrides.push_back("--scorer.backend");
      overrides.push_back(*scorer);
    }
    std::optional<std::filesystem::path> config_file;
    if (config_path) config_file = *config_path;
    const Context ctx = make_context(config_file, overrides);

    if (*index_cmd) run_index(ctx, index_args);
    if (*retrieve_cmd) run_retrieve(ctx, retrieve_args);
    if (*tune_cmd) run_tune(ctx, tune_args);
    if (*qa_cmd) run_qa(ctx, qa_args);
    if (*eval_cmd) run_eval(ctx, eval_args);
    if (*enrich_cmd) run_enrich(ctx, enrich_args);
    if (*stats_cmd) run_stats(ctx, stats_args);
    if (*serve_cmd) run_serve(ctx, serve_args);
  } catch (const statqa::ValidationError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return 0;
}
