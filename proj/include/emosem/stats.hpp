#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "emosem/agreement.hpp"
#include "emosem/corpus.hpp"

namespace emosem {

/// How "the intended emotion is rated highest" treats ties.
enum class HighestTieRule {
  favor_intended,  // rating(intended) >= every other rating
  strict,          // rating(intended) > every other rating
};

struct DatasetStats {
  double rate_intended_experienced = 0.0;
  double rate_other_emotions = 0.0;
  double rate_intended_highest = 0.0;
  AgreementResult alpha;
  std::size_t n_records = 0;
};

/// Throws ErrorCode::empty_corpus.
DatasetStats dataset_stats(const Corpus& corpus, int threshold = kDefaultEvokedThreshold,
                           HighestTieRule tie_rule = HighestTieRule::favor_intended);

/// Standard normal CDF via std::erfc: 0.5 * erfc(-z / sqrt(2)).
double normal_cdf(double z);

enum class RankSumSide { positive, negative };
std::string_view to_string(RankSumSide side);

struct WilcoxonResult {
  /// Signed so that it is computed from the positive rank sum:
  /// (R+ - n(n+1)/4) / sigma. Its magnitude equals the min(R+, R-) form.
  double z = 0.0;
  /// Two-sided: 2 * Phi(-|z|).
  double p = 1.0;
  std::size_t n_effective = 0;
  double rank_sum_positive = 0.0;
  double rank_sum_negative = 0.0;
  /// W = min(R+, R-).
  double w = 0.0;
  /// Which rank sum W is (the smaller one; positive on ties).
  RankSumSide based_on = RankSumSide::positive;
  /// Sum over tie groups of t^3 - t.
  double tie_correction = 0.0;
};

inline constexpr std::size_t kMinWilcoxonPairs = 10;

/// Paired signed-rank test on d_i = x_i - y_i with zero differences
/// dropped, average ranks for ties and the tie-corrected normal
/// approximation. Throws length_mismatch, or too_few_differences when
/// fewer than min_nonzero differences remain.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                    std::size_t min_nonzero = kMinWilcoxonPairs);

}  // namespace emosem
