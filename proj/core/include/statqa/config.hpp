#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "statqa/bm25.hpp"
#include "statqa/enrich.hpp"
#include "statqa/ensemble.hpp"
#include "statqa/pipeline.hpp"
#include "statqa/qa.hpp"
#include "statqa/scorer.hpp"

namespace statqa {

/// Every configurable value with its default. Any field can be overridden
/// by its dotted path (`bm25.k1`, `qa.pair_threshold`, ...).
nlohmann::json default_config();

/// Sets one dotted field from its textual value, converted to the type of
/// the existing default. Throws ValidationError for unknown fields or values
/// that do not convert.
void apply_override(nlohmann::json& config, std::string_view dotted_path, std::string_view value);

struct PipelineConfig {
  struct Paths {
    std::filesystem::path corpus;
    std::filesystem::path questions;
    std::filesystem::path index;
    std::filesystem::path params;
    std::filesystem::path type_aliases;
    std::filesystem::path stop_words;
  } paths;

  PrefixTemplate prefix;
  Bm25Params bm25;
  RetrievalSettings retrieval;
  std::string scorer = "baseline";
  HttpScorerOptions http;
  double grid_step = 0.01;
  QaOptions qa;
  AnswerRendering rendering;
  bool qa_use_gold_context = false;
  EnrichmentConfig enrich;
  std::size_t stats_bucket_width = 50;
  unsigned workers = 1;

  /// Builds and validates the typed configuration. Relative paths resolve
  /// against `base_dir`.
  static PipelineConfig from_json(const nlohmann::json& config, const std::filesystem::path& base_dir = {});

  Analyzer analyzer() const;
  TypeAliasTable type_aliases() const;
};

/// Reads a config file and merges it over the defaults.
nlohmann::json load_config(const std::filesystem::path& path);

}  // namespace statqa
