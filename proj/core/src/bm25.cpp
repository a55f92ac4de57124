#include "statqa/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "statqa/error.hpp"

namespace statqa {

namespace {
constexpr std::string_view kFormat = "statqa-bm25-index";
constexpr int kFormatVersion = 1;
}  // namespace

void Bm25Params::validate() const {
  if (!(k1 > 0.0) || !std::isfinite(k1)) throw ValidationError("bm25.k1 must be > 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ValidationError("bm25.b must lie in [0, 1]");
}

InvertedIndex InvertedIndex::build(const Corpus& corpus, const Analyzer& analyzer,
                                   const Bm25Params& params) {
  if (corpus.empty()) throw ValidationError("cannot build an index over an empty corpus");
  std::vector<std::vector<std::string>> docs;
  std::vector<ArticleKey> keys;
  docs.reserve(corpus.size());
  keys.reserve(corpus.size());
  for (const auto& article : corpus) {
    docs.push_back(analyzer.tokens(article.prefixed_text));
    keys.push_back(article.key());
  }
  return build(docs, std::move(keys), params, analyzer.version());
}

InvertedIndex InvertedIndex::build(const std::vector<std::vector<std::string>>& documents,
                                   std::vector<ArticleKey> keys, const Bm25Params& params,
                                   std::string tokenizer_version) {
  params.validate();
  if (documents.empty()) throw ValidationError("cannot build an index over zero documents");
  if (!keys.empty() && keys.size() != documents.size()) {
    throw std::invalid_argument("document keys must parallel documents");
  }
  InvertedIndex index;
  index.params_ = params;
  index.tokenizer_version_ = std::move(tokenizer_version);
  index.doc_keys_ = std::move(keys);
  index.doc_lengths_.reserve(documents.size());

  std::unordered_map<std::string, std::uint32_t> tf;
  for (std::uint32_t doc = 0; doc < documents.size(); ++doc) {
    tf.clear();
    for (const auto& token : documents[doc]) ++tf[token];
    for (const auto& [term, count] : tf) index.postings_[term].push_back({doc, count});
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(documents[doc].size()));
  }
  index.finalize();
  return index;
}

void InvertedIndex::finalize() {
  // Documents are visited in ordinal order, so every posting list is already sorted.
  double total = 0.0;
  for (auto len : doc_lengths_) total += len;
  avg_doc_length_ = doc_lengths_.empty() ? 0.0 : total / static_cast<double>(doc_lengths_.size());
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  if (it == postings_.end()) return {};
  return it->second;
}

double InvertedIndex::idf(std::string_view term) const {
  const double n = static_cast<double>(doc_count());
  const double df = static_cast<double>(document_frequency(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double InvertedIndex::term_weight(double idf, std::uint32_t tf, std::uint32_t doc) const {
  const double len_ratio =
      avg_doc_length_ > 0.0 ? static_cast<double>(doc_lengths_[doc]) / avg_doc_length_ : 0.0;
  const double norm = params_.k1 * (1.0 - params_.b + params_.b * len_ratio);
  const double f = static_cast<double>(tf);
  return idf * (f * (params_.k1 + 1.0)) / (f + norm);
}

double InvertedIndex::score(std::span<const std::string> query_tokens, std::uint32_t doc) const {
  if (doc >= doc_count()) throw std::out_of_range("document ordinal out of range");
  double total = 0.0;
  for (const auto& term : query_tokens) {
    auto list = postings(term);
    auto it = std::lower_bound(list.begin(), list.end(), doc,
                               [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    if (it == list.end() || it->doc != doc) continue;
    total += term_weight(idf(term), it->tf, doc);
  }
  return total;
}

std::vector<double> InvertedIndex::score_all(std::span<const std::string> query_tokens) const {
  std::vector<double> scores(doc_count(), 0.0);
  for (const auto& term : query_tokens) {
    auto list = postings(term);
    if (list.empty()) continue;
    const double term_idf = idf(term);
    for (const auto& p : list) scores[p.doc] += term_weight(term_idf, p.tf, p.doc);
  }
  return scores;
}

std::vector<Hit> InvertedIndex::top_k(std::span<const std::string> query_tokens, std::size_t k) const {
  if (k == 0) throw std::invalid_argument("top_k requires k >= 1");
  const auto scores = score_all(query_tokens);
  std::vector<Hit> hits;
  hits.reserve(scores.size());
  for (std::uint32_t d = 0; d < scores.size(); ++d) hits.push_back({d, scores[d]});
  auto better = [](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc < b.doc;
  };
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), better);
  hits.resize(keep);
  return hits;
}

std::string InvertedIndex::serialize() const {
  using nlohmann::json;
  json docs = json::array();
  for (std::uint32_t d = 0; d < doc_count(); ++d) {
    json entry = {{"length", doc_lengths_[d]}};
    if (has_keys()) {
      entry["law_id"] = doc_keys_[d].law_id;
      entry["article_id"] = doc_keys_[d].article_id;
    }
    docs.push_back(std::move(entry));
  }
  json postings = json::object();  // std::map-backed: keys come out sorted
  for (const auto& [term, list] : postings_) {
    json encoded = json::array();
    for (const auto& p : list) encoded.push_back({p.doc, p.tf});
    postings[term] = std::move(encoded);
  }
  json root = {{"format", kFormat},
               {"format_version", kFormatVersion},
               {"tokenizer_version", tokenizer_version_},
               {"params", {{"k1", params_.k1}, {"b", params_.b}}},
               {"docs", std::move(docs)},
               {"postings", std::move(postings)}};
  return root.dump();
}

InvertedIndex InvertedIndex::deserialize(std::string_view data, std::string_view expected_tokenizer_version) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(data.begin(), data.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("index: ") + e.what(), e.byte);
  }
  try {
    if (root.at("format").get<std::string>() != kFormat ||
        root.at("format_version").get<int>() != kFormatVersion) {
      throw ValidationError("index: unsupported format");
    }
    InvertedIndex index;
    index.tokenizer_version_ = root.at("tokenizer_version").get<std::string>();
    if (!expected_tokenizer_version.empty() && index.tokenizer_version_ != expected_tokenizer_version) {
      throw ValidationError("index: built with tokenizer '" + index.tokenizer_version_ +
                            "', expected '" + std::string(expected_tokenizer_version) + "'");
    }
    index.params_.k1 = root.at("params").at("k1").get<double>();
    index.params_.b = root.at("params").at("b").get<double>();
    index.params_.validate();
    const json& docs = root.at("docs");
    bool keyed = !docs.empty() && docs.front().contains("law_id");
    for (const json& d : docs) {
      index.doc_lengths_.push_back(d.at("length").get<std::uint32_t>());
      if (keyed) {
        index.doc_keys_.push_back({d.at("law_id").get<std::string>(), d.at("article_id").get<std::string>()});
      }
    }
    std::vector<std::uint64_t> tf_sum(index.doc_lengths_.size(), 0);
    for (const auto& [term, list] : root.at("postings").items()) {
      auto& out = index.postings_[term];
      for (const json& p : list) {
        Posting posting{p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()};
        if (posting.doc >= index.doc_lengths_.size()) {
          throw ValidationError("index: posting for '" + term + "' names a missing document");
        }
        if (!out.empty() && out.back().doc >= posting.doc) {
          throw ValidationError("index: postings for '" + term + "' are not sorted");
        }
        tf_sum[posting.doc] += posting.tf;
        out.push_back(posting);
      }
    }
    for (std::size_t d = 0; d < tf_sum.size(); ++d) {
      if (tf_sum[d] != index.doc_lengths_[d]) {
        throw ValidationError("index: term frequencies of document " + std::to_string(d) +
                              " do not sum to its length");
      }
    }
    index.finalize();
    return index;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("index: malformed content: ") + e.what());
  }
}

void InvertedIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize();
  if (!out) throw Error("failed writing " + path.string());
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path, std::string_view expected_tokenizer_version) {
  return deserialize(read_file(path), expected_tokenizer_version);
}

std::vector<RetrievedArticle> retrieve_topk(const InvertedIndex& index, const Analyzer& analyzer,
                                            std::string_view query, std::size_t k) {
  if (!index.has_keys()) throw std::invalid_argument("retrieve_topk needs an article-keyed index");
  const auto tokens = analyzer.tokens(query);
  std::vector<RetrievedArticle> out;
  for (const auto& hit : index.top_k(tokens, k)) {
    out.push_back({hit.doc, index.doc_key(hit.doc), hit.score});
  }
  return out;
}

}  // namespace statqa
