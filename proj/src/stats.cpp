#include "emosem/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "emosem/error.hpp"

namespace emosem {

DatasetStats dataset_stats(const Corpus& corpus, int threshold, HighestTieRule tie_rule) {
  if (corpus.records.empty()) {
    throw Error(ErrorCode::empty_corpus, "dataset statistics need at least one record");
  }
  std::size_t experienced = 0, other = 0, highest = 0;
  for (const auto& r : corpus.records) {
    const int own = r.rating(r.intended);
    if (own >= threshold) ++experienced;
    bool any_other = false;
    bool is_highest = true;
    for (Emotion e : kAllEmotions) {
      if (e == r.intended) continue;
      const int v = r.rating(e);
      if (v >= threshold) any_other = true;
      if (tie_rule == HighestTieRule::strict ? v >= own : v > own) is_highest = false;
    }
    if (any_other) ++other;
    if (is_highest) ++highest;
  }
  const double n = static_cast<double>(corpus.records.size());
  DatasetStats s;
  s.n_records = corpus.records.size();
  s.rate_intended_experienced = static_cast<double>(experienced) / n;
  s.rate_other_emotions = static_cast<double>(other) / n;
  s.rate_intended_highest = static_cast<double>(highest) / n;
  s.alpha = intended_vs_evoked_alpha(corpus, threshold);
  return s;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::string_view to_string(RankSumSide side) {
  return side == RankSumSide::positive ? "positive" : "negative";
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                    std::size_t min_nonzero) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::length_mismatch, "paired samples differ in length: " +
                                                std::to_string(x.size()) + " vs " +
                                                std::to_string(y.size()));
  }
  std::vector<double> d;
  d.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i] - y[i];
    if (v != 0.0) d.push_back(v);
  }
  if (d.size() < min_nonzero || d.empty()) {
    throw Error(ErrorCode::too_few_differences,
                std::to_string(d.size()) + " non-zero differences; need at least " +
                    std::to_string(std::max<std::size_t>(min_nonzero, 1)));
  }

  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });

  WilcoxonResult r;
  r.n_effective = d.size();
  // Average ranks over runs of equal |d|.
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    const double t = static_cast<double>(j - i);
    r.tie_correction += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) {
      if (d[order[k]] > 0.0) {
        r.rank_sum_positive += avg;
      } else {
        r.rank_sum_negative += avg;
      }
    }
    i = j;
  }

  const double n = static_cast<double>(d.size());
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - r.tie_correction / 48.0;
  r.based_on = r.rank_sum_positive <= r.rank_sum_negative ? RankSumSide::positive
                                                           : RankSumSide::negative;
  r.w = std::min(r.rank_sum_positive, r.rank_sum_negative);
  if (var <= 0.0) {
    r.z = 0.0;
    r.p = 1.0;
    return r;
  }
  r.z = (r.rank_sum_positive - mean) / std::sqrt(var);
  r.p = std::min(1.0, 2.0 * normal_cdf(-std::abs(r.z)));
  return r;
}

}  // namespace emosem
