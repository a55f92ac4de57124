#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "statqa/config.hpp"

namespace statqa::cli {

/// Config after defaults, file and dotted flag overrides.
struct Context {
  nlohmann::json raw;
  PipelineConfig config;
};

Context make_context(const std::optional<std::filesystem::path>& config_file,
                     const std::vector<std::string>& overrides);

struct IndexArgs {
  std::filesystem::path out;
};
struct RetrieveArgs {
  std::filesystem::path questions;
  std::filesystem::path out;
  std::optional<double> alpha;
  std::optional<double> theta;
  bool with_scores = false;
};
struct TuneArgs {
  std::filesystem::path questions;
  std::filesystem::path out;
};
struct QaArgs {
  std::filesystem::path questions;
  std::filesystem::path retrieved;
  std::filesystem::path out;
  std::optional<double> alpha;
  std::optional<double> theta;
};
struct EvalArgs {
  std::filesystem::path questions;
  std::filesystem::path predictions;
  std::filesystem::path answers;
  std::filesystem::path out;
  std::filesystem::path csv;
  std::vector<std::size_t> recall_at;
};
struct EnrichArgs {
  std::filesystem::path dump;
  std::filesystem::path mc_questions;
  std::filesystem::path factoid;
  std::filesystem::path out_dir;
};
struct StatsArgs {
  std::string target = "corpus";
  std::filesystem::path out;
};
struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<double> alpha;
  std::optional<double> theta;
};

void run_index(const Context& ctx, const IndexArgs& args);
void run_retrieve(const Context& ctx, const RetrieveArgs& args);
void run_tune(const Context& ctx, const TuneArgs& args);
void run_qa(const Context& ctx, const QaArgs& args);
void run_eval(const Context& ctx, const EvalArgs& args);
void run_enrich(const Context& ctx, const EnrichArgs& args);
void run_stats(const Context& ctx, const StatsArgs& args);
void run_serve(const Context& ctx, const ServeArgs& args);

}  // namespace statqa::cli
