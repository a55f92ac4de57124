#pragma once

#include <random>
#include <string>
#include <vector>

#include "statqa/corpus.hpp"
#include "statqa/ensemble.hpp"

namespace statqa::bench {

// Zipf-ish vocabulary so a few terms have long posting lists.
inline std::string synthetic_text(std::mt19937_64& rng, std::size_t words, int vocab) {
  std::geometric_distribution<int> geo(0.02);
  std::string text;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) text += ' ';
    text += "từ" + std::to_string(geo(rng) % vocab);
  }
  return text;
}

inline Corpus synthetic_corpus(std::size_t docs, std::size_t words = 120, int vocab = 5000) {
  std::mt19937_64 rng(42);
  std::vector<Article> articles;
  articles.reserve(docs);
  for (std::size_t d = 0; d < docs; ++d) {
    articles.push_back({"Luật " + std::to_string(d / 50), std::to_string(d % 50 + 1), synthetic_text(rng, words, vocab), ""});
  }
  return Corpus::from_articles(std::move(articles));
}

inline std::vector<std::vector<ScoredCandidate>> synthetic_pools(std::size_t questions, std::size_t depth,
                                                                 std::vector<ArticleKeySet>& gold) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<ScoredCandidate>> pools(questions);
  gold.assign(questions, {});
  for (std::size_t q = 0; q < questions; ++q) {
    for (std::size_t i = 0; i < depth; ++i) {
      ScoredCandidate c;
      c.qid = "q" + std::to_string(q);
      c.key = {"L", std::to_string(i)};
      c.bm25_raw = 20.0 * u(rng);
      c.semantic_raw = u(rng);
      pools[q].push_back(c);
    }
    normalize_pool(pools[q]);
    gold[q].insert(pools[q][q % depth].key);
  }
  return pools;
}

}  // namespace statqa::bench
