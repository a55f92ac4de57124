#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "statqa/corpus.hpp"

namespace statqa {

/// One (question, article) pair in a question's candidate pool.
struct ScoredCandidate {
  std::string qid;
  ArticleKey key;
  double bm25_raw = 0.0;
  double semantic_raw = 0.0;
  double bm25 = 0.0;      // min-max normalized over the pool
  double semantic = 0.0;  // min-max normalized over the pool
  double score = 0.0;     // alpha * bm25 + (1 - alpha) * semantic
};

void to_json(nlohmann::json& j, const ScoredCandidate& c);

/// (v - min) / (max - min). A constant list maps to all zeros.
/// Throws std::invalid_argument on an empty list.
std::vector<double> minmax_normalize(std::span<const double> values);

enum class NormalizationMode { PerQuestion, Global };

/// Fills `bm25` and `semantic` from the raw columns. `pool` holds one
/// question's candidates.
void normalize_pool(std::vector<ScoredCandidate>& pool);

/// Normalizes every pool; Global mode uses the min/max across all pools.
void normalize_pools(std::vector<std::vector<ScoredCandidate>>& pools, NormalizationMode mode);

/// Computes `score` for every candidate and sorts the pool: score descending,
/// then (law_id, article_id) ascending. Throws ValidationError when alpha is
/// outside [0, 1].
void fuse(std::vector<ScoredCandidate>& pool, double alpha);

/// Candidates with score >= theta, in pool order. When nothing qualifies and
/// `allow_empty` is false, the single best candidate is returned instead.
ArticleKeySet select(std::span<const ScoredCandidate> fused_pool, double theta, bool allow_empty = false);

struct EnsembleParams {
  double alpha = 1.0;
  double theta = 0.0;
  double grid_step = 0.01;
  std::string tuned_on;
  double achieved_f2 = 0.0;
};

void to_json(nlohmann::json& j, const EnsembleParams& p);
void from_json(const nlohmann::json& j, EnsembleParams& p);
EnsembleParams load_params(const std::filesystem::path& path);
void save_params(const EnsembleParams& params, const std::filesystem::path& path);

/// Produces the normalized candidate pool for a question.
using CandidateProvider = std::function<std::vector<ScoredCandidate>(const Question&)>;

struct GridSearchOptions {
  double step = 0.01;
  bool allow_empty_answer = false;
  std::string tuned_on;
  unsigned threads = 1;
};

struct GridSearchResult {
  EnsembleParams params;
  std::size_t evaluated_points = 0;
  /// F2-macro per grid point, alpha-major: f2[a * (n + 1) + t].
  std::vector<double> f2_grid;
};

/// Number of intervals on [0, 1] for `step`. Throws ValidationError unless
/// 1/step is an integer within 1e-9.
std::size_t grid_intervals(double step);

/// Exhaustive search over {0, step, ..., 1}^2 maximizing F2-macro on the
/// labeled questions. Ties go to the smaller alpha, then the smaller theta.
GridSearchResult grid_search(std::span<const Question> questions, const CandidateProvider& provider,
                             const GridSearchOptions& options);

/// Same search over pools that were already built (one per labeled question,
/// parallel to `gold`).
GridSearchResult grid_search(std::span<const std::vector<ScoredCandidate>> pools,
                             std::span<const ArticleKeySet> gold, const GridSearchOptions& options);

}  // namespace statqa
