#include "doctest.h"

#include <cmath>

#include "emosem/agreement.hpp"
#include "emosem/backends.hpp"
#include "emosem/rng.hpp"
#include "emosem/segmenter.hpp"
#include "emosem/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace emosem;

namespace {

using oracle::Items;

LabelSet random_set(Rng& rng, int n_labels) {
  LabelSet s;
  for (int k = 0; k < n_labels; ++k) {
    if (rng.bernoulli(0.4)) s.insert(emotion_at(static_cast<std::size_t>(k)));
  }
  return s;
}

}  // namespace

TEST_CASE("cosine similarity") {
  const std::vector<double> u{1, 2, 3};
  CHECK(cosine_similarity(u, u) == doctest::Approx(1.0));
  CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{1, 1}) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 0.0);
  CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{-1, 0}) == -1.0);
  CHECK_THROWS_CODE(cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 2}),
                    ErrorCode::dimension_mismatch);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v(5), cv(5);
    const double c = 0.1 + 10.0 * rng.uniform();
    for (std::size_t k = 0; k < 5; ++k) {
      v[k] = rng.uniform() - 0.5;
      cv[k] = c * v[k];
    }
    CHECK(cosine_similarity(v, cv) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("segmentation agreement") {
  HashingEmbedder emb;
  SegmentedTranscript a{"The dog died.", "I was sad.", {}, {}};
  const auto same = segmentation_agreement(a, a, emb);
  CHECK(same.descriptive == doctest::Approx(1.0));
  CHECK(same.expressive == doctest::Approx(1.0));

  SegmentedTranscript b{"The dog died.", "", {}, {}};
  const auto r = segmentation_agreement(a, b, emb);
  CHECK(r.expressive == 0.0);
  SegmentedTranscript c{"The dog died.", "", {}, {}};
  CHECK(segmentation_agreement(b, c, emb).expressive == 1.0);

  std::vector<std::pair<SegmentedTranscript, SegmentedTranscript>> pairs{{a, a}, {a, b}};
  RoleAgreement roles;
  const auto mean = mean_segmentation_agreement(pairs, emb, &roles);
  CHECK(roles.descriptive == doctest::Approx(1.0));
  CHECK(roles.expressive == doctest::Approx(0.5));
  CHECK(mean.kind == AgreementKind::cosine);
  CHECK(mean.n_items == 2);
}

TEST_CASE("rule mock against gold on a zero-noise corpus") {
  SynthConfig cfg;
  cfg.descriptive_signal = 1.0;
  cfg.expressive_signal = 1.0;
  cfg.evoked_noise = 0.0;
  const Corpus c = synthesize_corpus(cfg);
  std::vector<std::pair<SegmentedTranscript, SegmentedTranscript>> pairs;
  for (const auto& r : c.records) pairs.emplace_back(rule_based_segment(*r.transcript), gold_segments(c, r));
  RoleAgreement roles;
  mean_segmentation_agreement(pairs, HashingEmbedder{}, &roles);
  CHECK(roles.descriptive >= 0.9);
  CHECK(roles.expressive >= 0.9);
}

TEST_CASE("MASI distance hand cases") {
  const LabelSet fear{Emotion::fear};
  CHECK(masi_distance(fear, fear) == 0.0);
  CHECK(masi_distance(fear, LabelSet{Emotion::joy}) == 1.0);
  CHECK(masi_distance(fear, LabelSet{Emotion::fear, Emotion::sadness}) ==
        doctest::Approx(1.0 - 0.5 * 2.0 / 3.0).epsilon(1e-15));
  // Overlap without containment: J = 1/3, m = 1/3.
  CHECK(masi_distance(LabelSet{Emotion::fear, Emotion::joy}, LabelSet{Emotion::fear, Emotion::anger}) ==
        doctest::Approx(1.0 - 1.0 / 9.0).epsilon(1e-15));
  CHECK(masi_distance(LabelSet{}, LabelSet{}) == 0.0);
  CHECK(masi_distance(LabelSet{}, fear) == 1.0);
}

TEST_CASE("MASI properties over random pairs") {
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    const LabelSet a = random_set(rng, 6), b = random_set(rng, 6);
    const double d = masi_distance(a, b);
    CHECK(d == doctest::Approx(masi_distance(b, a)).epsilon(1e-15));
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(masi_distance(a, a) == 0.0);
    CHECK(std::abs(d - oracle::masi(a, b)) <= 1e-12);
  }
  for (Emotion x : kAllEmotions) {
    for (Emotion y : kAllEmotions) {
      if (x == y) continue;
      const double d = masi_distance(LabelSet{x}, LabelSet{x, y});
      CHECK(d > 0.0);
      CHECK(d < 1.0);
    }
  }
}

TEST_CASE("alpha basic cases") {
  const Items perfect{{LabelSet{Emotion::fear}, LabelSet{Emotion::fear}},
                      {LabelSet{Emotion::joy}, LabelSet{Emotion::joy}},
                      {LabelSet{Emotion::sadness, Emotion::fear}, LabelSet{Emotion::sadness, Emotion::fear}}};
  const auto r = krippendorff_alpha(perfect);
  CHECK(r.value == 1.0);
  CHECK(r.observed_disagreement == 0.0);
  CHECK(r.kind == AgreementKind::alpha);

  const Items same{{LabelSet{Emotion::fear}, LabelSet{Emotion::fear}},
                   {LabelSet{Emotion::fear}, LabelSet{Emotion::fear}}};
  CHECK_THROWS_CODE(krippendorff_alpha(same), ErrorCode::degenerate_data);
  CHECK_THROWS_CODE(krippendorff_alpha(Items{perfect.front()}), ErrorCode::invariant);
}

TEST_CASE("alpha on a four-item hand dataset matches the brute-force oracle") {
  const Items items{{LabelSet{Emotion::fear}, LabelSet{Emotion::fear, Emotion::sadness}},
                    {LabelSet{Emotion::joy}, LabelSet{Emotion::joy}},
                    {LabelSet{Emotion::anger}, LabelSet{Emotion::disgust}},
                    {LabelSet{Emotion::sadness}, LabelSet{}}};
  const auto r = krippendorff_alpha(items);
  CHECK(std::abs(r.value - oracle::alpha(items, masi_distance)) <= 1e-9);
  // By hand: (2/3 + 0 + 1 + 1) / 4.
  CHECK(r.observed_disagreement == doctest::Approx((2.0 / 3.0 + 2.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("alpha matches the brute-force oracle on 50 random instances") {
  Rng rng(123);
  int checked = 0;
  while (checked < 50) {
    Items items;
    const auto n = 2 + rng.below(5);
    for (std::size_t i = 0; i < n; ++i) items.emplace_back(random_set(rng, 3), random_set(rng, 3));
    double expected = 0.0;
    try {
      expected = krippendorff_alpha(items).expected_disagreement;
    } catch (const Error&) {
      continue;  // all observations identical
    }
    CHECK(expected > 0.0);
    CHECK(std::abs(krippendorff_alpha(items).value - oracle::alpha(items, masi_distance)) <= 1e-9);
    CHECK(std::abs(krippendorff_alpha(items, nominal_distance).value -
                   oracle::alpha(items, nominal_distance)) <= 1e-9);
    ++checked;
  }
}

TEST_CASE("nominal alpha on binary two-coder data matches the textbook formula") {
  // Ten units coded 0/1 by two observers.
  const int a[10] = {0, 1, 0, 0, 0, 0, 0, 0, 1, 0};
  const int b[10] = {1, 1, 1, 0, 0, 1, 0, 0, 0, 0};
  const LabelSet zero{}, one{Emotion::fear};
  Items items;
  for (int i = 0; i < 10; ++i) items.emplace_back(a[i] ? one : zero, b[i] ? one : zero);
  // n = 20 values, n0 = 14, n1 = 6, 4 disagreeing units (8 mismatched
  // ordered coincidences): alpha = 1 - (n - 1) * 8 / (2 * n0 * n1).
  const double textbook = 1.0 - 19.0 * 8.0 / (2.0 * 14.0 * 6.0);
  CHECK(std::abs(krippendorff_alpha(items, nominal_distance).value - textbook) <= 1e-12);
  CHECK(textbook == doctest::Approx(0.095).epsilon(0.01));
}

TEST_CASE("intended vs evoked alpha") {
  SynthConfig zero;
  zero.descriptive_signal = 1.0;
  zero.expressive_signal = 1.0;
  zero.evoked_noise = 0.0;
  const double clean = intended_vs_evoked_alpha(synthesize_corpus(zero)).value;
  CHECK(clean == 1.0);

  SynthConfig noisy = zero;
  noisy.evoked_noise = 1.0;
  const double messy = intended_vs_evoked_alpha(synthesize_corpus(noisy)).value;
  CHECK(messy < clean);

  const Corpus c = synthesize_corpus({});
  Items items;
  for (const auto& r : c.records) items.emplace_back(LabelSet{r.intended}, binarize_evoked(r.evoked, 3));
  CHECK(std::abs(intended_vs_evoked_alpha(c, 3).value - oracle::alpha(items, masi_distance)) <= 1e-9);
}
