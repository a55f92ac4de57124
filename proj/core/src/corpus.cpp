#include "statqa/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "statqa/error.hpp"

namespace statqa {
namespace {

using nlohmann::json;

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what(), e.byte);
  }
}

std::string string_field(const json& obj, const char* name, std::string_view context) {
  auto it = obj.find(name);
  if (it == obj.end()) {
    throw ValidationError(std::string(context) + ": missing field '" + name + "'");
  }
  if (it->is_string()) return normalize_nfc(it->get<std::string>());
  // Ids are sometimes stored as numbers in competition dumps.
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw ValidationError(std::string(context) + ": field '" + name + "' must be a string");
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string to_string(const ArticleKey& key) {
  return key.law_id + " / " + key.article_id;
}

void to_json(json& j, const ArticleKey& key) {
  j = json{{"law_id", key.law_id}, {"article_id", key.article_id}};
}

void from_json(const json& j, ArticleKey& key) {
  key.law_id = string_field(j, "law_id", "article reference");
  key.article_id = string_field(j, "article_id", "article reference");
}

// --- PrefixTemplate -------------------------------------------------------

PrefixTemplate::PrefixTemplate(std::string pattern) : pattern_(std::move(pattern)) {}

std::string PrefixTemplate::render(std::string_view law_id, std::string_view article_id) const {
  static constexpr std::string_view kArticle = "{article_id}";
  static constexpr std::string_view kLaw = "{law_id}";
  std::string out;
  out.reserve(pattern_.size() + law_id.size() + article_id.size());
  std::string_view rest = pattern_;
  while (!rest.empty()) {
    if (rest.starts_with(kArticle)) {
      out += article_id;
      rest.remove_prefix(kArticle.size());
    } else if (rest.starts_with(kLaw)) {
      out += law_id;
      rest.remove_prefix(kLaw.size());
    } else {
      out += rest.front();
      rest.remove_prefix(1);
    }
  }
  return out;
}

// --- Corpus ---------------------------------------------------------------

Corpus Corpus::from_articles(std::vector<Article> articles, const PrefixTemplate& prefix) {
  Corpus corpus;
  corpus.prefix_ = prefix;
  corpus.articles_.reserve(articles.size());
  for (auto& a : articles) {
    a.law_id = normalize_nfc(a.law_id);
    a.article_id = normalize_nfc(a.article_id);
    a.text = normalize_nfc(a.text);
    if (is_blank(a.text)) {
      throw ValidationError("empty article text for " + to_string(a.key()));
    }
    auto [it, inserted] = corpus.by_key_.emplace(a.key(), corpus.articles_.size());
    if (!inserted) {
      throw ValidationError("duplicate article " + to_string(a.key()));
    }
    a.prefixed_text = prefix.render(a.law_id, a.article_id) + " " + a.text;
    corpus.articles_.push_back(std::move(a));
  }
  return corpus;
}

const Article* Corpus::find(const ArticleKey& key) const {
  auto it = by_key_.find(key);
  return it == by_key_.end() ? nullptr : &articles_[it->second];
}

std::optional<std::size_t> Corpus::ordinal(const ArticleKey& key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Corpus::law_ids() const {
  std::vector<std::string> ids;
  std::set<std::string_view> seen;
  for (const auto& a : articles_) {
    if (seen.insert(a.law_id).second) ids.push_back(a.law_id);
  }
  return ids;
}

Corpus parse_corpus(std::string_view json_text, const PrefixTemplate& prefix) {
  const json root = parse_json(json_text, "corpus");
  if (!root.is_array()) throw ValidationError("corpus: top level must be a list of laws");
  std::vector<Article> articles;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& law = root[i];
    const std::string ctx = "corpus law #" + std::to_string(i);
    if (!law.is_object()) throw ValidationError(ctx + ": expected an object");
    const std::string law_id = string_field(law, "id", ctx);
    auto arts = law.find("articles");
    if (arts == law.end() || !arts->is_array()) {
      throw ValidationError(ctx + ": 'articles' must be a list");
    }
    for (const json& art : *arts) {
      if (!art.is_object()) throw ValidationError(ctx + ": article entries must be objects");
      Article a;
      a.law_id = law_id;
      a.article_id = string_field(art, "id", ctx);
      a.text = string_field(art, "text", ctx + " article " + a.article_id);
      articles.push_back(std::move(a));
    }
  }
  return Corpus::from_articles(std::move(articles), prefix);
}

Corpus load_corpus(const std::filesystem::path& path, const PrefixTemplate& prefix) {
  return parse_corpus(read_file(path), prefix);
}

std::string serialize_corpus(const Corpus& corpus) {
  json laws = json::array();
  std::map<std::string, std::size_t> law_slot;
  for (const auto& a : corpus) {
    auto [it, inserted] = law_slot.emplace(a.law_id, laws.size());
    if (inserted) laws.push_back({{"id", a.law_id}, {"articles", json::array()}});
    laws[it->second]["articles"].push_back({{"id", a.article_id}, {"text", a.text}});
  }
  return laws.dump(2);
}

Corpus merge_corpora(const std::vector<Corpus>& parts, const PrefixTemplate& prefix) {
  std::vector<Article> all;
  for (const auto& part : parts) {
    all.insert(all.end(), part.begin(), part.end());
  }
  return Corpus::from_articles(std::move(all), prefix);
}

// --- Questions ------------------------------------------------------------

std::string_view to_string(QuestionType type) {
  switch (type) {
    case QuestionType::Factoid: return "factoid";
    case QuestionType::YesNo: return "yes_no";
    case QuestionType::MultipleChoice: return "multiple_choice";
  }
  return "unknown";
}

const Choice* Question::find_choice(std::string_view label) const {
  for (const auto& c : choices) {
    if (c.label == label) return &c;
  }
  return nullptr;
}

TypeAliasTable::TypeAliasTable() {
  add("factoid", QuestionType::Factoid);
  add("yes_no", QuestionType::YesNo);
  add("yesno", QuestionType::YesNo);
  add("yes/no", QuestionType::YesNo);
  add("multiple_choice", QuestionType::MultipleChoice);
  add("multiple-choice", QuestionType::MultipleChoice);
  add("Tự luận", QuestionType::Factoid);
  add("Đúng/Sai", QuestionType::YesNo);
  add("Trắc nghiệm", QuestionType::MultipleChoice);
}

void TypeAliasTable::add(std::string_view alias, QuestionType type) {
  aliases_[fold_case(alias)] = type;
}

std::optional<QuestionType> TypeAliasTable::lookup(std::string_view alias) const {
  auto it = aliases_.find(fold_case(alias));
  if (it == aliases_.end()) return std::nullopt;
  return it->second;
}

TypeAliasTable TypeAliasTable::parse(std::string_view json_text) {
  const json root = parse_json(json_text, "type aliases");
  if (!root.is_object()) throw ValidationError("type aliases: expected an object");
  TypeAliasTable defaults;
  TypeAliasTable table;
  for (const auto& [alias, target] : root.items()) {
    if (!target.is_string()) throw ValidationError("type aliases: value for '" + alias + "' must be a string");
    auto type = defaults.lookup(target.get<std::string>());
    if (!type) {
      throw ValidationError("type aliases: '" + target.get<std::string>() + "' is not a question type");
    }
    table.add(alias, *type);
  }
  return table;
}

TypeAliasTable TypeAliasTable::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

std::optional<bool> parse_yes_no(std::string_view text) {
  static const std::set<std::string> kYes = {"đúng", "true", "yes", "có", "1"};
  static const std::set<std::string> kNo = {"sai", "false", "no", "không", "0"};
  std::string folded = fold_case(text);
  auto first = folded.find_first_not_of(" \t\r\n");
  auto last = folded.find_last_not_of(" \t\r\n.");
  if (first == std::string::npos) return std::nullopt;
  folded = folded.substr(first, last - first + 1);
  if (kYes.contains(folded)) return true;
  if (kNo.contains(folded)) return false;
  return std::nullopt;
}

namespace {

std::vector<Choice> parse_choices(const json& node, const std::string& ctx) {
  std::vector<Choice> choices;
  if (node.is_object()) {
    for (const auto& [label, text] : node.items()) {
      if (!text.is_string()) throw ValidationError(ctx + ": choice '" + label + "' must be a string");
      choices.push_back({normalize_nfc(label), normalize_nfc(text.get<std::string>())});
    }
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      const json& c = node[i];
      if (c.is_string()) {
        choices.push_back({std::string(1, static_cast<char>('A' + i)),
                           normalize_nfc(c.get<std::string>())});
      } else if (c.is_object()) {
        choices.push_back({string_field(c, "label", ctx), string_field(c, "text", ctx)});
      } else {
        throw ValidationError(ctx + ": malformed choice entry");
      }
    }
  } else {
    throw ValidationError(ctx + ": 'choices' must be an object or a list");
  }
  return choices;
}

}  // namespace

std::vector<Question> parse_questions(std::string_view json_text, const TypeAliasTable& aliases) {
  const json root = parse_json(json_text, "questions");
  if (!root.is_array()) throw ValidationError("questions: top level must be a list");
  std::vector<Question> out;
  std::set<std::string> seen_ids;
  out.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& obj = root[i];
    std::string ctx = "question #" + std::to_string(i);
    if (!obj.is_object()) throw ValidationError(ctx + ": expected an object");
    Question q;
    q.question_id = string_field(obj, "question_id", ctx);
    ctx = "question " + q.question_id;
    if (!seen_ids.insert(q.question_id).second) {
      throw ValidationError(ctx + ": duplicate question_id");
    }
    const std::string type_name = string_field(obj, "question_type", ctx);
    auto type = aliases.lookup(type_name);
    if (!type) throw ValidationError(ctx + ": unknown question_type '" + type_name + "'");
    q.qtype = *type;
    q.text = string_field(obj, "text", ctx);

    if (auto it = obj.find("choices"); it != obj.end() && !it->is_null()) {
      q.choices = parse_choices(*it, ctx);
    }
    if (q.qtype == QuestionType::MultipleChoice) {
      if (q.choices.empty()) throw ValidationError(ctx + ": multiple-choice question without choices");
      if (q.choices.size() < 3 || q.choices.size() > 4) {
        throw ValidationError(ctx + ": multiple-choice question needs 3 or 4 choices, got " +
                              std::to_string(q.choices.size()));
      }
    } else if (!q.choices.empty()) {
      throw ValidationError(ctx + ": choices are only allowed on multiple-choice questions");
    }

    if (auto it = obj.find("relevant_articles"); it != obj.end() && !it->is_null()) {
      if (!it->is_array()) throw ValidationError(ctx + ": 'relevant_articles' must be a list");
      ArticleKeySet gold;
      for (const json& ref : *it) gold.insert(ref.get<ArticleKey>());
      q.gold_relevant = std::move(gold);
    }

    if (auto it = obj.find("answer"); it != obj.end() && !it->is_null()) {
      std::string answer;
      if (it->is_boolean()) {
        answer = it->get<bool>() ? "true" : "false";
      } else if (it->is_string()) {
        answer = normalize_nfc(it->get<std::string>());
      } else {
        throw ValidationError(ctx + ": 'answer' must be a string or boolean");
      }
      if (q.qtype == QuestionType::YesNo) {
        auto verdict = parse_yes_no(answer);
        if (!verdict) throw ValidationError(ctx + ": yes/no answer '" + answer + "' not recognised");
        answer = *verdict ? "true" : "false";
      } else if (q.qtype == QuestionType::MultipleChoice && q.find_choice(answer) == nullptr) {
        throw ValidationError(ctx + ": answer '" + answer + "' is not a choice label");
      }
      q.gold_answer = std::move(answer);
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<Question> load_questions(const std::filesystem::path& path, const TypeAliasTable& aliases) {
  return parse_questions(read_file(path), aliases);
}

CorpusStats corpus_stats(const Corpus& corpus, const Analyzer& analyzer, std::size_t bucket_width) {
  if (corpus.empty()) throw ValidationError("corpus_stats: empty corpus");
  std::vector<std::size_t> lengths;
  lengths.reserve(corpus.size());
  for (const auto& a : corpus) lengths.push_back(analyzer.word_count(a.text));
  return build_histogram(lengths, bucket_width);
}

}  // namespace statqa
