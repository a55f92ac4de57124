#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace statqa {

struct HistogramBucket {
  std::size_t lo = 0;  // inclusive
  std::size_t hi = 0;  // exclusive
  std::size_t count = 0;

  friend bool operator==(const HistogramBucket&, const HistogramBucket&) = default;
};

/// Length distribution over token counts. Only non-empty buckets are listed,
/// in ascending order.
struct LengthHistogram {
  std::vector<HistogramBucket> buckets;
  std::size_t total = 0;
  double mean = 0.0;
  double median = 0.0;
  std::size_t max = 0;
};

/// Buckets are [k*width, (k+1)*width). Throws std::invalid_argument for width 0.
/// Empty input yields an empty histogram with zeroed summary values.
LengthHistogram build_histogram(std::span<const std::size_t> lengths, std::size_t bucket_width);

/// `{buckets: [{lo, hi, count}], mean, median, max}`
void to_json(nlohmann::json& j, const LengthHistogram& h);

}  // namespace statqa
