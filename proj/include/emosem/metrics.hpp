#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "emosem/emotion.hpp"
#include "emosem/linear_model.hpp"

namespace emosem {

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // gold positives
  std::size_t predicted = 0;  // predicted positives
  /// False when the class is absent from both gold and predictions; such
  /// classes are left out of the macro average.
  bool in_average = false;
};

/// Macro and micro P/R/F1.
///
/// Zero division: precision is 0 when nothing was predicted for a class,
/// recall is 0 when the class has no gold positives, F1 is 0 when
/// P + R = 0.
struct ClassificationMetrics {
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  std::array<ClassScores, kNumEmotions> per_class{};
  std::size_t n_examples = 0;
};

struct RegressionMetrics {
  double mse = 0.0;
  double mae = 0.0;
  /// In input order.
  std::vector<double> squared_errors;
};

/// Single-label, over the six classes. Throws shape_mismatch on unequal lengths.
ClassificationMetrics single_label_metrics(std::span<const Emotion> gold,
                                           std::span<const Emotion> predicted);

/// Per-emotion binary scores aggregated macro and micro.
ClassificationMetrics multi_label_metrics(std::span<const LabelSet> gold,
                                          std::span<const LabelSet> predicted);

RegressionMetrics regression_metrics(std::span<const double> gold,
                                     std::span<const double> predicted);

/// Predicts with the model and scores against gold. The model task must be
/// intended (single-label gold) or evoked (set gold); otherwise
/// ErrorCode::shape_mismatch.
ClassificationMetrics evaluate_classification(const TrainedModel& model,
                                              std::span<const SparseVector> x,
                                              std::span<const Emotion> gold);
ClassificationMetrics evaluate_classification(const TrainedModel& model,
                                              std::span<const SparseVector> x,
                                              std::span<const LabelSet> gold);

/// Model task must be valence or arousal.
RegressionMetrics evaluate_regression(const TrainedModel& model,
                                      std::span<const SparseVector> x,
                                      std::span<const double> gold);

}  // namespace emosem
