#include "doctest.h"

#include <cmath>
#include <numeric>

#include "emosem/linear_model.hpp"
#include "emosem/rng.hpp"
#include "emosem/synth.hpp"
#include "emosem/vectorizer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace emosem;

namespace {

SparseVector sparse(const std::vector<double>& dense) {
  SparseVector v;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) v.entries.emplace_back(static_cast<std::uint32_t>(i), dense[i]);
  }
  return v;
}

std::vector<SparseVector> random_inputs(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<SparseVector> x;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> dense(d);
    for (auto& v : dense) v = rng.bernoulli(0.6) ? rng.uniform() * 2.0 - 1.0 : 0.0;
    x.push_back(sparse(dense));
  }
  return x;
}

LinearParams random_params(Rng& rng, std::size_t outputs, std::size_t features) {
  LinearParams p(outputs, features);
  for (auto& w : p.weights) w = rng.uniform() - 0.5;
  for (auto& b : p.bias) b = rng.uniform() - 0.5;
  return p;
}

SynthConfig zero_noise() {
  SynthConfig c;
  c.descriptive_signal = 1.0;
  c.expressive_signal = 1.0;
  c.evoked_noise = 0.0;
  return c;
}

}  // namespace

TEST_CASE("unigrams and bigrams") {
  const auto t = unigrams_and_bigrams("The dog, the DOG.");
  const std::vector<std::string> expected{"the", "dog", "the", "dog", "the dog", "dog the", "the dog"};
  CHECK(t == expected);
  CHECK(unigrams_and_bigrams("").empty());
}

TEST_CASE("vectorizer fit") {
  const std::vector<std::string> docs{"a b", "a c", "a b d"};
  const auto v = Vectorizer::fit(docs);
  // 'a' is in every document: ln(4/4) + 1.
  REQUIRE(v.index_of("a") >= 0);
  CHECK(v.idf()[static_cast<std::size_t>(v.index_of("a"))] == doctest::Approx(1.0));
  CHECK(v.idf()[static_cast<std::size_t>(v.index_of("d"))] == doctest::Approx(std::log(2.0) + 1.0));
  CHECK(v.vocabulary().front() == "a");
  CHECK(v.index_of("zzz") == -1);
  CHECK(v.index_of("a b") >= 0);

  const auto pruned = Vectorizer::fit(docs, 2);
  for (const auto& t : pruned.vocabulary()) {
    std::size_t df = 0;
    for (const auto& d : docs) {
      const auto toks = unigrams_and_bigrams(d);
      df += std::find(toks.begin(), toks.end(), t) != toks.end() ? 1 : 0;
    }
    CHECK(df >= 2);
  }
  CHECK(pruned.size() == 3);  // a, b, "a b"
  CHECK(Vectorizer::fit(docs, 1, 3).size() == 3);

  const auto again = Vectorizer::fit(docs);
  CHECK(again.vocabulary() == v.vocabulary());
  CHECK(again.fit_fingerprint() == v.fit_fingerprint());
  CHECK(v.fit_fingerprint() == documents_fingerprint(docs));
  CHECK_THROWS_CODE(Vectorizer::fit(std::vector<std::string>{}), ErrorCode::empty_corpus);
}

TEST_CASE("vectorizer transform") {
  const std::vector<std::string> docs{"a b", "a c", "a b d"};
  const auto v = Vectorizer::fit(docs);
  CHECK(v.transform("nothing here").empty());
  CHECK(v.transform("").norm() == 0.0);
  for (const auto& d : docs) CHECK(v.transform(d).norm() == doctest::Approx(1.0).epsilon(1e-12));

  // One known token: a single unit entry.
  const auto one = v.transform("c");
  REQUIRE(one.entries.size() == 1);
  CHECK(one.entries[0].second == doctest::Approx(1.0));
  CHECK(one.entries[0].first == static_cast<std::uint32_t>(v.index_of("c")));

  // Hand tf-idf for "a a d": tf(a)=2, idf(a)=1; tf(d)=1, idf(d)=ln2+1.
  const auto x = v.transform("a a d");
  const double ia = 2.0, id = std::log(2.0) + 1.0, n = std::hypot(ia, id);
  for (const auto& [k, val] : x.entries) {
    if (k == static_cast<std::uint32_t>(v.index_of("a"))) CHECK(val == doctest::Approx(ia / n));
    if (k == static_cast<std::uint32_t>(v.index_of("d"))) CHECK(val == doctest::Approx(id / n));
  }
  for (std::size_t i = 1; i < x.entries.size(); ++i) CHECK(x.entries[i - 1].first < x.entries[i].first);
}

TEST_CASE("vectorizer from_parts") {
  const auto v = Vectorizer::fit(std::vector<std::string>{"x y", "y z"});
  const auto r = Vectorizer::from_parts(v.vocabulary(), v.idf(), v.min_df(), v.max_features(), v.fit_fingerprint());
  CHECK(r.transform("x y z") == v.transform("x y z"));
  CHECK_THROWS_CODE(Vectorizer::from_parts({"a", "b"}, {1.0}, 1, 0, 0), ErrorCode::shape_mismatch);
  CHECK_THROWS_CODE(Vectorizer::from_parts({"a", "a"}, {1.0, 1.0}, 1, 0, 0), ErrorCode::parse);
}

TEST_CASE("softmax and sigmoid") {
  std::vector<double> z{1000.0, 1000.0, -1000.0};
  softmax(z);
  CHECK(z[0] == doctest::Approx(0.5));
  CHECK(z[2] == doctest::Approx(0.0));
  CHECK(std::accumulate(z.begin(), z.end(), 0.0) == doctest::Approx(1.0));
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == doctest::Approx(1.0));
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0));
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(17);
  const std::size_t n = 5, d = 4;
  const auto x = random_inputs(rng, n, d);
  std::vector<int> classes, binary;
  std::vector<double> targets;
  for (std::size_t i = 0; i < n; ++i) {
    classes.push_back(static_cast<int>(rng.below(kNumEmotions)));
    binary.push_back(rng.bernoulli(0.5) ? 1 : 0);
    targets.push_back(rng.uniform());
  }
  const double l2 = 0.05;

  SUBCASE("softmax cross-entropy") {
    const auto p = random_params(rng, kNumEmotions, d);
    LinearParams g;
    softmax_objective(p, x, classes, l2, &g);
    CHECK(oracle::max_gradient_error(p, [&](const LinearParams& q) { return softmax_objective(q, x, classes, l2); }, g) < 1e-4);
  }
  SUBCASE("logistic on one row") {
    const auto p = random_params(rng, kNumEmotions, d);
    LinearParams g;
    logistic_objective(p, 2, x, binary, l2, &g);
    CHECK(oracle::max_gradient_error(p, [&](const LinearParams& q) { return logistic_objective(q, 2, x, binary, l2); }, g, 2) < 1e-4);
  }
  SUBCASE("squared error") {
    const auto p = random_params(rng, 1, d);
    LinearParams g;
    squared_error_objective(p, x, targets, l2, &g);
    CHECK(oracle::max_gradient_error(p, [&](const LinearParams& q) { return squared_error_objective(q, x, targets, l2); }, g) < 1e-4);
  }
}

TEST_CASE("objective values by hand") {
  // Zero weights: each class gets probability 1/6.
  const std::vector<SparseVector> x{sparse({1.0, 0.0}), sparse({0.0, 1.0})};
  const std::vector<int> y{0, 3};
  const LinearParams zero(kNumEmotions, 2);
  CHECK(softmax_objective(zero, x, y, 0.0) == doctest::Approx(std::log(6.0)));
  CHECK(logistic_objective(zero, 0, x, std::vector<int>{1, 0}, 0.0) == doctest::Approx(std::log(2.0)));
  LinearParams one(1, 2);
  one.w(0, 0) = 2.0;
  // predictions 2 and 0 vs targets 0 and 0: (4 + 0)/2 + (0.1/2) * 4
  CHECK(squared_error_objective(one, x, std::vector<double>{0.0, 0.0}, 0.1) == doctest::Approx(2.2));
}

TEST_CASE("training on separable data") {
  // Class k lights feature k.
  std::vector<SparseVector> x;
  std::vector<Emotion> y;
  for (int rep = 0; rep < 3; ++rep) {
    for (Emotion e : kAllEmotions) {
      std::vector<double> dense(kNumEmotions, 0.0);
      dense[index_of(e)] = 1.0;
      x.push_back(sparse(dense));
      y.push_back(e);
    }
  }
  const auto m = train_intended(x, y, kNumEmotions);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(predict_intended(m, x[i]) == y[i]);
  CHECK(m.meta.epochs <= 500);
  CHECK(m.meta.n_train == x.size());
  for (std::size_t i = 1; i < m.meta.loss_trace.size(); ++i) {
    CHECK(m.meta.loss_trace[i] <= m.meta.loss_trace[i - 1] + 1e-12);
  }
  CHECK(m.meta.loss_trace.front() == doctest::Approx(std::log(6.0)));
  CHECK(m.meta.final_loss == doctest::Approx(m.meta.loss_trace.back()));
  const auto p = predict_proba(m, x[0]);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("zero feature vectors leave the loss at ln 6 only through the bias") {
  std::vector<SparseVector> x(6);
  std::vector<Emotion> y(kAllEmotions.begin(), kAllEmotions.end());
  const auto m = train_intended(x, y, 3);
  // Balanced labels with no features: the gradient is zero from the start.
  CHECK(m.meta.final_loss == doctest::Approx(std::log(6.0)));
  for (double w : m.params.weights) CHECK(w == 0.0);
  CHECK(predict_intended(m, SparseVector{}) == emotion_at(0));
}

TEST_CASE("regression") {
  SUBCASE("constant targets") {
    Rng rng(3);
    const auto x = random_inputs(rng, 20, 4);
    const std::vector<double> t(20, 0.3);
    const auto m = train_va(x, t, 4, Task::valence, {.learning_rate = 0.3, .l2 = 0.0, .max_epochs = 2000});
    for (const auto& xi : x) CHECK(predict_value(m, xi) == doctest::Approx(0.3).epsilon(1e-3));
    const auto r = train_va(x, t, 4, Task::valence, {.learning_rate = 0.3, .l2 = 1e-2, .max_epochs = 2000});
    double norm = 0.0;
    for (double w : r.params.weights) norm += w * w;
    CHECK(std::sqrt(norm) < 1e-3);
    CHECK(r.params.bias[0] == doctest::Approx(0.3).epsilon(1e-3));
  }
  SUBCASE("exact linear targets") {
    // Orthonormal one-hot inputs: y = 0.2 + 0.5 x_k.
    std::vector<SparseVector> x;
    std::vector<double> t;
    for (int rep = 0; rep < 2; ++rep) {
      for (std::size_t k = 0; k < 3; ++k) {
        std::vector<double> dense(3, 0.0);
        dense[k] = 1.0;
        x.push_back(sparse(dense));
        t.push_back(0.2 + 0.15 * static_cast<double>(k));
      }
    }
    const auto m = train_va(x, t, 3, Task::arousal, {.learning_rate = 0.4, .l2 = 0.0, .max_epochs = 5000});
    double mse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mse += std::pow(predict_value(m, x[i]) - t[i], 2);
    CHECK(mse / static_cast<double>(x.size()) < 1e-4);
    CHECK(m.task == Task::arousal);
  }
  SUBCASE("predictions are clamped") {
    const std::vector<SparseVector> x{sparse({1.0}), sparse({-1.0})};
    auto m = train_va(x, std::vector<double>{1.0, 0.0}, 1);
    m.params.bias[0] = 5.0;
    CHECK(predict_value(m, x[0]) == 1.0);
    m.params.bias[0] = -5.0;
    CHECK(predict_value(m, x[0]) == 0.0);
  }
  SUBCASE("errors") {
    const std::vector<SparseVector> x{sparse({1.0})};
    CHECK_THROWS_CODE(train_va(x, std::vector<double>{0.5}, 1), ErrorCode::empty_corpus);
    CHECK_THROWS_CODE(train_va(std::vector<SparseVector>{sparse({1.0}), sparse({1.0})},
                               std::vector<double>{0.5, 0.5}, 1, Task::intended),
                      ErrorCode::invariant);
  }
}

TEST_CASE("training errors") {
  std::vector<SparseVector> x{sparse({1.0}), sparse({0.5})};
  std::vector<Emotion> y{Emotion::fear, Emotion::joy};
  const auto msg = testing::error_message_of([&] { train_intended(x, y, 1); });
  CHECK(testing::error_code_of([&] { train_intended(x, y, 1); }) == ErrorCode::missing_class);
  CHECK(msg.find("sadness") != std::string::npos);  // first missing in canonical order

  std::vector<SparseVector> big;
  std::vector<double> t;
  for (int i = 0; i < 6; ++i) {
    big.push_back(sparse({1.0, 1.0, 1.0}));
    t.push_back(1.0);
  }
  CHECK_THROWS_CODE(train_va(big, t, 3, Task::valence, {.learning_rate = 50.0, .l2 = 0.0, .max_epochs = 200}),
                    ErrorCode::divergence);
  CHECK_THROWS_CODE(train_va(big, t, 3, Task::valence, {.learning_rate = 0.0}), ErrorCode::invariant);
  CHECK_THROWS_CODE(train_softmax(std::vector<SparseVector>{}, std::vector<int>{}, 2, 1), ErrorCode::empty_corpus);
  CHECK_THROWS_CODE(train_softmax(x, std::vector<int>{0, 5}, 2, 1), ErrorCode::invariant);
}

TEST_CASE("evoked training with a degenerate emotion") {
  std::vector<SparseVector> x{sparse({1.0, 0.0}), sparse({0.0, 1.0}), sparse({1.0, 1.0})};
  std::vector<LabelSet> y{LabelSet{Emotion::fear, Emotion::joy}, LabelSet{Emotion::joy},
                          LabelSet{Emotion::fear, Emotion::joy}};
  const auto m = train_evoked(x, y, 2);
  // joy is always positive, anger etc. never.
  CHECK(m.meta.warnings.size() == 5);
  for (const auto& xi : x) {
    const auto p = predict_evoked(m, xi);
    CHECK(p.contains(Emotion::joy));
    CHECK_FALSE(p.contains(Emotion::anger));
  }
  CHECK(predict_evoked(m, x[0]).contains(Emotion::fear));
  CHECK_FALSE(predict_evoked(m, x[1]).contains(Emotion::fear));
}

TEST_CASE("zero-noise corpus: trained models recover the intended emotion") {
  const Corpus c = synthesize_corpus(zero_noise());
  std::vector<std::string> docs;
  std::vector<Emotion> y;
  std::vector<LabelSet> ys;
  for (const auto& r : c.records) {
    docs.push_back(*r.transcript);
    y.push_back(r.intended);
    ys.push_back(binarize_evoked(r.evoked));
  }
  const auto v = Vectorizer::fit(docs);
  const auto x = v.transform_all(docs);
  const auto mi = train_intended(x, y, v.size(), {.learning_rate = 2.0, .max_epochs = 1000});
  const auto me = train_evoked(x, ys, v.size(), {.learning_rate = 2.0, .max_epochs = 1000});
  std::size_t correct = 0, exact = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    correct += predict_intended(mi, x[i]) == y[i] ? 1 : 0;
    exact += predict_evoked(me, x[i]) == LabelSet{y[i]} ? 1 : 0;
  }
  CHECK(correct == x.size());
  CHECK(exact == x.size());
}

TEST_CASE("model JSON round-trip") {
  Rng rng(5);
  const auto x = random_inputs(rng, 12, 3);
  std::vector<double> t;
  for (std::size_t i = 0; i < 12; ++i) t.push_back(rng.uniform());
  auto m = train_va(x, t, 3);
  m.vectorizer = Vectorizer::fit(std::vector<std::string>{"one two", "two three", "x"});
  const auto back = model_from_json(model_to_json(m));
  CHECK(back.task == m.task);
  CHECK(back.params.weights == m.params.weights);
  CHECK(back.params.bias == m.params.bias);
  CHECK(back.vectorizer.vocabulary() == m.vectorizer.vocabulary());
  CHECK(back.vectorizer.fit_fingerprint() == m.vectorizer.fit_fingerprint());
  CHECK(back.meta.epochs == m.meta.epochs);
  CHECK(model_to_json(back) == model_to_json(m));
  for (const auto& xi : x) CHECK(predict_value(back, xi) == predict_value(m, xi));

  CHECK_THROWS_CODE(model_from_json("not json"), ErrorCode::parse);
  CHECK_THROWS_CODE(model_from_json("{}"), ErrorCode::parse);
}

TEST_CASE("task and condition names") {
  for (Task t : {Task::intended, Task::evoked, Task::valence, Task::arousal}) {
    CHECK(task_from_string(to_string(t)) == t);
  }
  for (Condition c : {Condition::full, Condition::descriptive, Condition::expressive}) {
    CHECK(condition_from_string(to_string(c)) == c);
  }
  CHECK_THROWS_CODE(task_from_string("mood"), ErrorCode::parse);
}
