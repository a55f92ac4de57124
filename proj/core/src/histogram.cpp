#include "statqa/histogram.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace statqa {

LengthHistogram build_histogram(std::span<const std::size_t> lengths, std::size_t bucket_width) {
  if (bucket_width == 0) throw std::invalid_argument("bucket width must be positive");
  LengthHistogram h;
  if (lengths.empty()) return h;

  std::map<std::size_t, std::size_t> counts;
  for (std::size_t len : lengths) ++counts[len / bucket_width];
  for (const auto& [bucket, count] : counts) {
    h.buckets.push_back({bucket * bucket_width, (bucket + 1) * bucket_width, count});
  }

  std::vector<std::size_t> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());
  h.total = sorted.size();
  h.max = sorted.back();
  const double sum = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  h.mean = sum / static_cast<double>(sorted.size());
  const std::size_t mid = sorted.size() / 2;
  h.median = sorted.size() % 2 == 1
                 ? static_cast<double>(sorted[mid])
                 : (static_cast<double>(sorted[mid - 1]) + static_cast<double>(sorted[mid])) / 2.0;
  return h;
}

void to_json(nlohmann::json& j, const LengthHistogram& h) {
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& b : h.buckets) {
    buckets.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
  }
  j = nlohmann::json{{"buckets", std::move(buckets)},
                     {"total", h.total},
                     {"mean", h.mean},
                     {"median", h.median},
                     {"max", h.max}};
}

}  // namespace statqa
