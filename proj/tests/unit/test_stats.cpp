#include "doctest.h"

#include <cmath>

#include "emosem/rng.hpp"
#include "emosem/stats.hpp"
#include "emosem/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace emosem;

namespace {

// d = x - y = 1 2 -3 4 5 6 7 -8 9 10 11 12: no ties, R- = 11.
const std::vector<double> kHandX{1, 2, 0, 4, 5, 6, 7, 0, 9, 10, 11, 12};
const std::vector<double> kHandY{0, 0, 3, 0, 0, 0, 0, 8, 0, 0, 0, 0};

std::pair<std::vector<double>, std::vector<double>> random_pairs(Rng& rng, std::size_t n, bool ties) {
  std::vector<double> x(n), y(n);
  const double shift = rng.uniform();
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform() + shift;
    y[i] = rng.uniform() + 0.5;
    if (ties) {
      x[i] = std::round(x[i] * 6.0) / 2.0;
      y[i] = std::round(y[i] * 6.0) / 2.0;
    }
  }
  return {x, y};
}

ResponseRecord hand_record(Emotion intended, RatingVector evoked, const std::string& pid) {
  ResponseRecord r;
  r.participant_id = pid;
  r.clip_id = "c";
  r.transcript = "t";
  r.intended = intended;
  r.evoked = evoked;
  return r;
}

}  // namespace

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  for (const auto& [z, phi] : oracle::normal_table()) CHECK(std::abs(normal_cdf(z) - phi) <= 1e-4);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const double z = (rng.uniform() - 0.5) * 12.0;
    CHECK(std::abs(normal_cdf(-z) - (1.0 - normal_cdf(z))) <= 1e-12);
  }
  CHECK(normal_cdf(-40.0) >= 0.0);
  CHECK(normal_cdf(40.0) == 1.0);
}

TEST_CASE("wilcoxon hand dataset against exact enumeration") {
  const auto r = wilcoxon_signed_rank(kHandX, kHandY);
  const auto e = oracle::wilcoxon(kHandX, kHandY);
  CHECK(r.n_effective == 12);
  CHECK(r.rank_sum_negative == 11.0);
  CHECK(r.rank_sum_positive == 67.0);
  CHECK(r.w == 11.0);
  CHECK(r.based_on == RankSumSide::negative);
  CHECK(r.tie_correction == 0.0);
  // sigma^2 = 12 * 13 * 25 / 24 = 162.5; z from R+ = (67 - 39) / sigma.
  CHECK(std::abs(r.z - 28.0 / std::sqrt(162.5)) <= 1e-9);
  CHECK(std::abs(std::abs(r.z) - std::abs(e.z_min)) <= 1e-9);
  CHECK(std::abs(r.z - e.z_positive) <= 1e-9);
  CHECK(std::abs(r.p - e.p) <= 0.01);
  CHECK(r.p < 0.05);
}

TEST_CASE("wilcoxon Z identity and tail p on random n = 12 instances") {
  Rng rng(77);
  int tail = 0;
  for (int t = 0; t < 200; ++t) {
    const auto [x, y] = random_pairs(rng, 12, t % 2 == 1);
    const auto e = oracle::wilcoxon(x, y);
    if (e.n < kMinWilcoxonPairs) continue;
    const auto r = wilcoxon_signed_rank(x, y);
    CHECK(r.n_effective == e.n);
    CHECK(std::abs(r.rank_sum_positive - e.rank_sum_positive) <= 1e-9);
    CHECK(std::abs(r.z - e.z_positive) <= 1e-9);
    CHECK(std::abs(std::abs(r.z) - std::abs(e.z_min)) <= 1e-9);
    CHECK(r.p == doctest::Approx(std::min(1.0, 2.0 * normal_cdf(-std::abs(e.z_min)))).epsilon(1e-12));
    // At n = 12 the normal approximation is within 0.01 of exact only in
    // the significance region; mid-range the gap reaches about 0.04.
    if (e.p < 0.05) {
      CHECK(std::abs(r.p - e.p) <= 0.01);
      ++tail;
    }
  }
  CHECK(tail >= 20);
}

TEST_CASE("wilcoxon properties") {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const auto [x, y] = random_pairs(rng, 10 + rng.below(20), t % 3 == 0);
    WilcoxonResult a;
    try {
      a = wilcoxon_signed_rank(x, y);
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::too_few_differences);
      continue;
    }
    const auto b = wilcoxon_signed_rank(y, x);
    CHECK(a.z == -b.z);
    CHECK(a.p == b.p);
    const double n = static_cast<double>(a.n_effective);
    CHECK(a.rank_sum_positive + a.rank_sum_negative == doctest::Approx(n * (n + 1) / 2));
    CHECK(a.p >= 0.0);
    CHECK(a.p <= 1.0);

    // A common constant keeps every difference, hence every rank, unchanged
    // when it is exactly representable.
    std::vector<double> xs = x, ys = y;
    for (auto& v : xs) v += 4.0;
    for (auto& v : ys) v += 4.0;
    bool same_diffs = true;
    for (std::size_t i = 0; i < x.size(); ++i) same_diffs &= (xs[i] - ys[i]) == (x[i] - y[i]);
    if (same_diffs) {
      const auto s = wilcoxon_signed_rank(xs, ys);
      CHECK(s.z == a.z);
      CHECK(s.p == a.p);
    }
  }
}

TEST_CASE("wilcoxon ties and zeros") {
  // d = 0 0 1 1 1 2 2 -2 3 3 3 3: two zeros dropped, groups of 3, 3, 4.
  const std::vector<double> x{1, 1, 2, 2, 2, 3, 3, 0, 4, 4, 4, 4};
  const std::vector<double> y{1, 1, 1, 1, 1, 1, 1, 2, 1, 1, 1, 1};
  const auto r = wilcoxon_signed_rank(x, y);
  CHECK(r.n_effective == 10);
  CHECK(r.tie_correction == doctest::Approx(24.0 + 24.0 + 60.0));
  // Ranks: 2, 2, 2, 5, 5, 5, 8.5 x4; the negative one has rank 5.
  CHECK(r.rank_sum_negative == doctest::Approx(5.0));
  const auto e = oracle::wilcoxon(x, y);
  CHECK(std::abs(r.z - e.z_positive) <= 1e-9);
}

TEST_CASE("wilcoxon errors") {
  CHECK_THROWS_CODE(wilcoxon_signed_rank(std::vector<double>{1, 2}, std::vector<double>{1}),
                    ErrorCode::length_mismatch);
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> y = x;
  for (std::size_t i = 0; i < 9; ++i) y[i] += 1.0;
  CHECK_THROWS_CODE(wilcoxon_signed_rank(x, y), ErrorCode::too_few_differences);
  CHECK_NOTHROW(wilcoxon_signed_rank(x, y, 9));
}

TEST_CASE("dataset stats on a hand corpus") {
  using E = Emotion;
  Corpus c;
  // Ratings in canonical order: sadness fear joy disgust surprise anger.
  c.records.push_back(hand_record(E::sadness, {5, 0, 0, 0, 0, 0}, "P1"));  // exp, none, top
  c.records.push_back(hand_record(E::fear, {0, 4, 0, 4, 0, 0}, "P2"));     // exp, other, tie
  c.records.push_back(hand_record(E::joy, {0, 0, 2, 0, 3, 0}, "P3"));      // not exp, other
  c.records.push_back(hand_record(E::anger, {0, 0, 0, 0, 1, 6}, "P4"));    // exp, none, top
  c.records.push_back(hand_record(E::disgust, {0, 0, 0, 3, 0, 5}, "P5"));  // exp, other
  const auto s = dataset_stats(c, 3);
  CHECK(s.n_records == 5);
  CHECK(s.rate_intended_experienced == doctest::Approx(0.8));
  CHECK(s.rate_other_emotions == doctest::Approx(0.6));
  CHECK(s.rate_intended_highest == doctest::Approx(0.6));  // tie counts
  CHECK(dataset_stats(c, 3, HighestTieRule::strict).rate_intended_highest == doctest::Approx(0.4));
  CHECK(dataset_stats(c, 5).rate_intended_experienced == doctest::Approx(0.4));

  CHECK_THROWS_CODE(dataset_stats(Corpus{}), ErrorCode::empty_corpus);
}

TEST_CASE("dataset stats in the zero-noise limit") {
  SynthConfig cfg;
  cfg.descriptive_signal = 1.0;
  cfg.expressive_signal = 1.0;
  cfg.evoked_noise = 0.0;
  const auto s = dataset_stats(synthesize_corpus(cfg));
  CHECK(s.rate_intended_experienced == 1.0);
  CHECK(s.rate_other_emotions == 0.0);
  CHECK(s.rate_intended_highest == 1.0);
  CHECK(s.alpha.value == 1.0);
}
