#include "statqa/http_scorer.hpp"

#include <chrono>
#include <future>
#include <semaphore>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "statqa/error.hpp"

namespace statqa {

using nlohmann::json;

HttpScorer::HttpScorer(std::string base_url, HttpScorerOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  if (options_.max_attempts < 1) options_.max_attempts = 1;
  if (options_.max_in_flight < 1) options_.max_in_flight = 1;
  if (options_.batch_size == 0) options_.batch_size = 1;
  std::string url = base_url_;
  if (url.find("://") == std::string::npos) url = "http://" + url;
  const auto scheme_end = url.find("://") + 3;
  const auto path_start = url.find('/', scheme_end);
  origin_ = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    path_prefix_ = url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
}

std::string HttpScorer::post_json(const std::string& path, const std::string& body) const {
  auto backoff = std::chrono::milliseconds(options_.backoff_initial_ms);
  std::string last_error;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    httplib::Client client(origin_);
    const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(path_prefix_ + path, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "server returned HTTP " + std::to_string(res->status);
    } else if (res->status != 200) {
      throw ProtocolError(base_url_ + path + ": HTTP " + std::to_string(res->status) + ": " + res->body);
    } else {
      return res->body;
    }
    if (attempt < options_.max_attempts) {
      spdlog::warn("{}{}: {} (attempt {}/{}), retrying", base_url_, path, last_error, attempt,
                   options_.max_attempts);
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError(base_url_ + path + ": " + last_error);
}

PairScoreResponse HttpScorer::score_batch(PairTask task, const std::vector<PairItem>& items,
                                          std::size_t begin, std::size_t end) const {
  json payload_items = json::array();
  for (std::size_t i = begin; i < end; ++i) {
    payload_items.push_back({{"id", items[i].id}, {"text_a", items[i].text_a}, {"text_b", items[i].text_b}});
  }
  const json payload = {{"task", std::string(to_string(task))}, {"items", std::move(payload_items)}};
  const std::string body = post_json("/score_pairs", payload.dump());

  std::unordered_map<std::string, double> by_id;
  try {
    const json reply = json::parse(body);
    for (const json& s : reply.at("scores")) {
      if (!by_id.emplace(s.at("id").get<std::string>(), s.at("score").get<double>()).second) {
        throw ProtocolError("score_pairs: duplicate id in response");
      }
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("score_pairs: malformed response: ") + e.what());
  }
  if (by_id.size() != end - begin) {
    throw ProtocolError("score_pairs: response has " + std::to_string(by_id.size()) + " scores for " +
                        std::to_string(end - begin) + " items");
  }
  PairScoreResponse out;
  for (std::size_t i = begin; i < end; ++i) {
    auto it = by_id.find(items[i].id);
    if (it == by_id.end()) throw ProtocolError("score_pairs: response is missing id '" + items[i].id + "'");
    out.scores.push_back({items[i].id, it->second});
  }
  return out;
}

PairScoreResponse HttpScorer::score_pairs(const PairScoreRequest& request) const {
  const auto& items = request.items;
  std::vector<std::pair<std::size_t, std::size_t>> batches;
  for (std::size_t b = 0; b < items.size(); b += options_.batch_size) {
    batches.emplace_back(b, std::min(items.size(), b + options_.batch_size));
  }
  if (batches.size() <= 1) {
    return batches.empty() ? PairScoreResponse{} : score_batch(request.task, items, 0, items.size());
  }

  std::counting_semaphore<> slots(options_.max_in_flight);
  std::vector<std::future<PairScoreResponse>> pending;
  pending.reserve(batches.size());
  for (const auto& [begin, end] : batches) {
    slots.acquire();
    pending.push_back(std::async(std::launch::async, [&, begin = begin, end = end] {
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{slots};
      return score_batch(request.task, items, begin, end);
    }));
  }
  PairScoreResponse out;
  out.scores.reserve(items.size());
  std::exception_ptr first_error;
  for (auto& f : pending) {
    try {
      auto part = f.get();
      out.scores.insert(out.scores.end(), part.scores.begin(), part.scores.end());
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

SpanLogits HttpScorer::span_logits(std::string_view question, std::string_view context) const {
  const json payload = {{"question", std::string(question)}, {"context", std::string(context)}};
  const std::string body = post_json("/span_logits", payload.dump());
  try {
    const json reply = json::parse(body);
    SpanLogits logits;
    logits.start_scores = reply.at("start_scores").get<std::vector<double>>();
    logits.end_scores = reply.at("end_scores").get<std::vector<double>>();
    for (const json& o : reply.at("token_offsets")) {
      logits.token_offsets.push_back({o.at(0).get<std::size_t>(), o.at(1).get<std::size_t>()});
    }
    return logits;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("span_logits: malformed response: ") + e.what());
  }
}

HttpScorer::Health HttpScorer::health() const {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  auto res = client.Get(path_prefix_ + "/health");
  if (!res) throw TransportError(base_url_ + "/health: " + httplib::to_string(res.error()));
  Health h;
  try {
    const json reply = json::parse(res->body);
    h.ok = res->status == 200 && reply.value("status", "") == "ok";
    h.model = reply.value("model", "");
  } catch (const json::exception&) {
    h.ok = false;
  }
  return h;
}

}  // namespace statqa
