#include "doctest.h"

#include "emosem/metrics.hpp"
#include "emosem/rng.hpp"
#include "test_util.hpp"

using namespace emosem;

namespace {

// Straight from the definitions, one class at a time.
double oracle_macro_f1(const std::vector<LabelSet>& gold, const std::vector<LabelSet>& pred) {
  double sum = 0.0;
  int classes = 0;
  for (Emotion e : kAllEmotions) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = gold[i].contains(e), p = pred[i].contains(e);
      tp += g && p;
      fp += !g && p;
      fn += g && !p;
    }
    if (tp + fp + fn == 0) continue;
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    sum += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    ++classes;
  }
  return classes ? sum / classes : 0.0;
}

LabelSet random_set(Rng& rng) {
  LabelSet s;
  for (Emotion e : kAllEmotions) {
    if (rng.bernoulli(0.3)) s.insert(e);
  }
  return s;
}

}  // namespace

TEST_CASE("single-label hand confusion matrix") {
  using E = Emotion;
  const std::vector<Emotion> gold{E::sadness, E::sadness, E::fear, E::joy};
  const std::vector<Emotion> pred{E::sadness, E::fear, E::fear, E::sadness};
  const auto m = single_label_metrics(gold, pred);
  const auto& s = m.per_class[index_of(E::sadness)];
  CHECK(s.precision == doctest::Approx(0.5));
  CHECK(s.recall == doctest::Approx(0.5));
  const auto& f = m.per_class[index_of(E::fear)];
  CHECK(f.precision == doctest::Approx(0.5));
  CHECK(f.recall == doctest::Approx(1.0));
  CHECK(f.f1 == doctest::Approx(2.0 / 3.0));
  // joy: never predicted, so precision 0 and F1 0.
  const auto& j = m.per_class[index_of(E::joy)];
  CHECK(j.precision == 0.0);
  CHECK(j.f1 == 0.0);
  CHECK(j.in_average);
  CHECK_FALSE(m.per_class[index_of(E::anger)].in_average);
  CHECK(m.macro_precision == doctest::Approx(1.0 / 3.0));
  CHECK(m.macro_recall == doctest::Approx(0.5));
  CHECK(m.macro_f1 == doctest::Approx((0.5 + 2.0 / 3.0) / 3.0));
  CHECK(m.micro_f1 == doctest::Approx(0.5));
  CHECK(m.n_examples == 4);
}

TEST_CASE("perfect and empty predictions") {
  const std::vector<LabelSet> gold{LabelSet{Emotion::fear}, LabelSet{Emotion::joy, Emotion::anger}};
  const auto perfect = multi_label_metrics(gold, gold);
  CHECK(perfect.macro_f1 == 1.0);
  CHECK(perfect.micro_f1 == 1.0);
  const std::vector<LabelSet> none(2);
  const auto zero = multi_label_metrics(gold, none);
  CHECK(zero.macro_f1 == 0.0);
  CHECK(zero.micro_precision == 0.0);
  CHECK(zero.micro_recall == 0.0);
}

TEST_CASE("multi-label metrics agree with a per-class oracle and ignore order") {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    std::vector<LabelSet> gold, pred;
    const auto n = 1 + rng.below(10);
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(random_set(rng));
      pred.push_back(random_set(rng));
    }
    const auto m = multi_label_metrics(gold, pred);
    CHECK(std::abs(m.macro_f1 - oracle_macro_f1(gold, pred)) <= 1e-12);
    CHECK(m.macro_f1 >= 0.0);
    CHECK(m.macro_f1 <= 1.0);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rng.shuffle(std::span<std::size_t>(idx));
    std::vector<LabelSet> g2, p2;
    for (auto i : idx) {
      g2.push_back(gold[i]);
      p2.push_back(pred[i]);
    }
    const auto m2 = multi_label_metrics(g2, p2);
    CHECK(m2.macro_f1 == doctest::Approx(m.macro_f1).epsilon(1e-15));
    CHECK(m2.micro_f1 == doctest::Approx(m.micro_f1).epsilon(1e-15));
  }
}

TEST_CASE("regression metrics") {
  const std::vector<double> gold{0.0, 1.0};
  const std::vector<double> pred{0.5, 0.5};
  const auto r = regression_metrics(gold, pred);
  CHECK(r.mse == doctest::Approx(0.25));
  CHECK(r.mae == doctest::Approx(0.5));
  CHECK(r.squared_errors == std::vector<double>{0.25, 0.25});
  CHECK(regression_metrics(gold, gold).mse == 0.0);
}

TEST_CASE("shape mismatch") {
  CHECK_THROWS_CODE(regression_metrics(std::vector<double>{1.0}, std::vector<double>{}),
                    ErrorCode::shape_mismatch);
  CHECK_THROWS_CODE(single_label_metrics(std::vector<Emotion>{Emotion::fear}, std::vector<Emotion>{}),
                    ErrorCode::shape_mismatch);
  TrainedModel m;
  m.task = Task::valence;
  CHECK_THROWS_CODE(evaluate_classification(m, std::vector<SparseVector>{}, std::vector<Emotion>{}),
                    ErrorCode::shape_mismatch);
}
