#include "statqa/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "statqa/error.hpp"
#include "statqa/eval.hpp"
#include "statqa/parallel.hpp"

namespace statqa {

using nlohmann::json;

void to_json(json& j, const ScoredCandidate& c) {
  j = json{{"question_id", c.qid},
           {"law_id", c.key.law_id},
           {"article_id", c.key.article_id},
           {"w_bm25_raw", c.bm25_raw},
           {"w_bert_raw", c.semantic_raw},
           {"w_bm25", c.bm25},
           {"w_bert", c.semantic},
           {"score", c.score}};
}

std::vector<double> minmax_normalize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("minmax_normalize: empty list");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(range > 0.0 ? (v - min) / range : 0.0);
  return out;
}

namespace {

void apply_range(std::vector<ScoredCandidate>& pool, double bm25_min, double bm25_max,
                 double sem_min, double sem_max) {
  const double bm25_range = bm25_max - bm25_min;
  const double sem_range = sem_max - sem_min;
  for (auto& c : pool) {
    c.bm25 = bm25_range > 0.0 ? (c.bm25_raw - bm25_min) / bm25_range : 0.0;
    c.semantic = sem_range > 0.0 ? (c.semantic_raw - sem_min) / sem_range : 0.0;
  }
}

bool fused_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.key < b.key;
}

}  // namespace

void normalize_pool(std::vector<ScoredCandidate>& pool) {
  if (pool.empty()) return;
  std::vector<double> bm25, sem;
  bm25.reserve(pool.size());
  sem.reserve(pool.size());
  for (const auto& c : pool) {
    bm25.push_back(c.bm25_raw);
    sem.push_back(c.semantic_raw);
  }
  const auto nb = minmax_normalize(bm25);
  const auto ns = minmax_normalize(sem);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool[i].bm25 = nb[i];
    pool[i].semantic = ns[i];
  }
}

void normalize_pools(std::vector<std::vector<ScoredCandidate>>& pools, NormalizationMode mode) {
  if (mode == NormalizationMode::PerQuestion) {
    for (auto& pool : pools) normalize_pool(pool);
    return;
  }
  bool any = false;
  double bmin = 0, bmax = 0, smin = 0, smax = 0;
  for (const auto& pool : pools) {
    for (const auto& c : pool) {
      if (!any) {
        bmin = bmax = c.bm25_raw;
        smin = smax = c.semantic_raw;
        any = true;
      }
      bmin = std::min(bmin, c.bm25_raw);
      bmax = std::max(bmax, c.bm25_raw);
      smin = std::min(smin, c.semantic_raw);
      smax = std::max(smax, c.semantic_raw);
    }
  }
  for (auto& pool : pools) apply_range(pool, bmin, bmax, smin, smax);
}

void fuse(std::vector<ScoredCandidate>& pool, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  for (auto& c : pool) c.score = alpha * c.bm25 + (1.0 - alpha) * c.semantic;
  std::sort(pool.begin(), pool.end(), fused_before);
}

ArticleKeySet select(std::span<const ScoredCandidate> fused_pool, double theta, bool allow_empty) {
  ArticleKeySet out;
  for (const auto& c : fused_pool) {
    if (c.score >= theta) out.insert(c.key);
  }
  if (out.empty() && !allow_empty && !fused_pool.empty()) {
    auto best = std::min_element(fused_pool.begin(), fused_pool.end(), fused_before);
    out.insert(best->key);
  }
  return out;
}

void to_json(json& j, const EnsembleParams& p) {
  j = json{{"alpha", p.alpha},
           {"theta", p.theta},
           {"grid_step", p.grid_step},
           {"tuned_on", p.tuned_on},
           {"achieved_f2", p.achieved_f2}};
}

void from_json(const json& j, EnsembleParams& p) {
  p.alpha = j.at("alpha").get<double>();
  p.theta = j.at("theta").get<double>();
  p.grid_step = j.value("grid_step", 0.01);
  p.tuned_on = j.value("tuned_on", std::string());
  p.achieved_f2 = j.value("achieved_f2", 0.0);
  if (!(p.alpha >= 0.0 && p.alpha <= 1.0) || !(p.theta >= 0.0 && p.theta <= 1.0)) {
    throw ValidationError("ensemble params: alpha and theta must lie in [0, 1]");
  }
  if (!(p.achieved_f2 >= 0.0 && p.achieved_f2 <= 1.0)) {
    throw ValidationError("ensemble params: achieved_f2 must lie in [0, 1]");
  }
}

EnsembleParams load_params(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text).get<EnsembleParams>();
  } catch (const json::parse_error& e) {
    throw ParseError("params: " + std::string(e.what()), e.byte);
  } catch (const json::exception& e) {
    throw ValidationError("params: " + std::string(e.what()));
  }
}

void save_params(const EnsembleParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << json(params).dump(2) << "\n";
}

std::size_t grid_intervals(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ValidationError("grid step must lie in (0, 1]");
  const double n = std::round(1.0 / step);
  if (std::abs(n * step - 1.0) > 1e-9) {
    throw ValidationError("grid step must divide [0, 1] evenly");
  }
  return static_cast<std::size_t>(n);
}

GridSearchResult grid_search(std::span<const std::vector<ScoredCandidate>> pools,
                             std::span<const ArticleKeySet> gold, const GridSearchOptions& options) {
  if (pools.empty()) throw ValidationError("grid_search: no labeled questions");
  if (pools.size() != gold.size()) throw std::invalid_argument("grid_search: pools and gold differ in size");
  const std::size_t n = grid_intervals(options.step);
  const std::size_t side = n + 1;

  GridSearchResult result;
  result.f2_grid.assign(side * side, 0.0);
  result.evaluated_points = side * side;

  // For a fixed alpha every selection is a prefix of the fused order, so each
  // question needs one sort plus prefix counts of distinct keys and hits.
  auto evaluate_alpha = [&](std::size_t a) {
    const double alpha = static_cast<double>(a) / static_cast<double>(n);
    std::vector<double> sums(side, 0.0);
    std::vector<std::size_t> distinct, hits;
    for (std::size_t q = 0; q < pools.size(); ++q) {
      std::vector<ScoredCandidate> fused = pools[q];
      fuse(fused, alpha);
      distinct.assign(fused.size() + 1, 0);
      hits.assign(fused.size() + 1, 0);
      ArticleKeySet seen;
      for (std::size_t i = 0; i < fused.size(); ++i) {
        const bool fresh = seen.insert(fused[i].key).second;
        distinct[i + 1] = distinct[i] + (fresh ? 1 : 0);
        hits[i + 1] = hits[i] + (fresh && gold[q].contains(fused[i].key) ? 1 : 0);
      }
      const double gold_size = static_cast<double>(gold[q].size());
      std::size_t m = fused.size();
      // theta ascending keeps fewer candidates, so walk m down
      for (std::size_t t = 0; t < side; ++t) {
        const double theta = static_cast<double>(t) / static_cast<double>(n);
        while (m > 0 && !(fused[m - 1].score >= theta)) --m;
        std::size_t keep = m;
        if (keep == 0 && !options.allow_empty_answer && !fused.empty()) keep = 1;
        const double precision =
            distinct[keep] == 0 ? 0.0 : static_cast<double>(hits[keep]) / static_cast<double>(distinct[keep]);
        const double recall = gold_size == 0.0 ? 0.0 : static_cast<double>(hits[keep]) / gold_size;
        sums[t] += f2_score(precision, recall);
      }
    }
    for (std::size_t t = 0; t < side; ++t) result.f2_grid[a * side + t] = sums[t] / static_cast<double>(pools.size());
  };

  parallel_for(side, options.threads, evaluate_alpha);

  // Row-major scan with strict improvement: smaller alpha, then smaller theta wins ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.f2_grid.size(); ++i) {
    if (result.f2_grid[i] > result.f2_grid[best]) best = i;
  }
  result.params.alpha = static_cast<double>(best / side) / static_cast<double>(n);
  result.params.theta = static_cast<double>(best % side) / static_cast<double>(n);
  result.params.grid_step = options.step;
  result.params.tuned_on = options.tuned_on;
  result.params.achieved_f2 = result.f2_grid[best];
  return result;
}

GridSearchResult grid_search(std::span<const Question> questions, const CandidateProvider& provider,
                             const GridSearchOptions& options) {
  std::vector<std::vector<ScoredCandidate>> pools;
  std::vector<ArticleKeySet> gold;
  for (const auto& q : questions) {
    if (!q.gold_relevant || q.gold_relevant->empty()) {
      throw ValidationError("grid_search: question '" + q.question_id + "' has no gold articles");
    }
    pools.push_back(provider(q));
    gold.push_back(*q.gold_relevant);
  }
  return grid_search(pools, gold, options);
}

}  // namespace statqa
