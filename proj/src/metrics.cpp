#include "emosem/metrics.hpp"

#include <cmath>
#include <string>

#include "emosem/error.hpp"

namespace emosem {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::shape_mismatch, "gold has " + std::to_string(a) +
                                               " entries but predictions have " +
                                               std::to_string(b));
  }
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }
double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

struct Counts {
  std::array<std::size_t, kNumEmotions> tp{}, fp{}, fn{};
};

ClassificationMetrics summarize(const Counts& c, std::size_t n_examples) {
  ClassificationMetrics m;
  m.n_examples = n_examples;
  double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
  std::size_t n_avg = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t k = 0; k < kNumEmotions; ++k) {
    auto& s = m.per_class[k];
    s.support = c.tp[k] + c.fn[k];
    s.predicted = c.tp[k] + c.fp[k];
    s.precision = ratio(static_cast<double>(c.tp[k]), static_cast<double>(s.predicted));
    s.recall = ratio(static_cast<double>(c.tp[k]), static_cast<double>(s.support));
    s.f1 = f1_of(s.precision, s.recall);
    s.in_average = s.support > 0 || s.predicted > 0;
    if (s.in_average) {
      sum_p += s.precision;
      sum_r += s.recall;
      sum_f += s.f1;
      ++n_avg;
    }
    tp += c.tp[k];
    fp += c.fp[k];
    fn += c.fn[k];
  }
  if (n_avg > 0) {
    m.macro_precision = sum_p / static_cast<double>(n_avg);
    m.macro_recall = sum_r / static_cast<double>(n_avg);
    m.macro_f1 = sum_f / static_cast<double>(n_avg);
  }
  m.micro_precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  m.micro_recall = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  m.micro_f1 = f1_of(m.micro_precision, m.micro_recall);
  return m;
}

}  // namespace

ClassificationMetrics single_label_metrics(std::span<const Emotion> gold,
                                           std::span<const Emotion> predicted) {
  check_lengths(gold.size(), predicted.size());
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = index_of(gold[i]);
    const auto p = index_of(predicted[i]);
    if (g == p) {
      ++c.tp[g];
    } else {
      ++c.fn[g];
      ++c.fp[p];
    }
  }
  return summarize(c, gold.size());
}

ClassificationMetrics multi_label_metrics(std::span<const LabelSet> gold,
                                          std::span<const LabelSet> predicted) {
  check_lengths(gold.size(), predicted.size());
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (Emotion e : kAllEmotions) {
      const auto k = index_of(e);
      const bool g = gold[i].contains(e);
      const bool p = predicted[i].contains(e);
      if (g && p) ++c.tp[k];
      if (!g && p) ++c.fp[k];
      if (g && !p) ++c.fn[k];
    }
  }
  return summarize(c, gold.size());
}

RegressionMetrics regression_metrics(std::span<const double> gold,
                                     std::span<const double> predicted) {
  check_lengths(gold.size(), predicted.size());
  RegressionMetrics m;
  m.squared_errors.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const double d = predicted[i] - gold[i];
    m.squared_errors.push_back(d * d);
    m.mse += d * d;
    m.mae += std::abs(d);
  }
  if (!gold.empty()) {
    m.mse /= static_cast<double>(gold.size());
    m.mae /= static_cast<double>(gold.size());
  }
  return m;
}

ClassificationMetrics evaluate_classification(const TrainedModel& model,
                                              std::span<const SparseVector> x,
                                              std::span<const Emotion> gold) {
  if (model.task != Task::intended) {
    throw Error(ErrorCode::shape_mismatch, "single-label gold needs an intended model, got " +
                                               std::string(to_string(model.task)));
  }
  check_lengths(gold.size(), x.size());
  std::vector<Emotion> pred;
  pred.reserve(x.size());
  for (const auto& v : x) pred.push_back(predict_intended(model, v));
  return single_label_metrics(gold, pred);
}

ClassificationMetrics evaluate_classification(const TrainedModel& model,
                                              std::span<const SparseVector> x,
                                              std::span<const LabelSet> gold) {
  if (model.task != Task::evoked) {
    throw Error(ErrorCode::shape_mismatch, "label-set gold needs an evoked model, got " +
                                               std::string(to_string(model.task)));
  }
  check_lengths(gold.size(), x.size());
  std::vector<LabelSet> pred;
  pred.reserve(x.size());
  for (const auto& v : x) pred.push_back(predict_evoked(model, v));
  return multi_label_metrics(gold, pred);
}

RegressionMetrics evaluate_regression(const TrainedModel& model,
                                      std::span<const SparseVector> x,
                                      std::span<const double> gold) {
  if (model.task != Task::valence && model.task != Task::arousal) {
    throw Error(ErrorCode::shape_mismatch, "regression gold needs a valence or arousal model, got " +
                                               std::string(to_string(model.task)));
  }
  check_lengths(gold.size(), x.size());
  std::vector<double> pred;
  pred.reserve(x.size());
  for (const auto& v : x) pred.push_back(predict_value(model, v));
  return regression_metrics(gold, pred);
}

}  // namespace emosem
