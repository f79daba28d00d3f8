#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emosem/emotion.hpp"
#include "emosem/vectorizer.hpp"

namespace emosem {

enum class Task { intended, evoked, valence, arousal };
enum class Condition { full, descriptive, expressive };

std::string_view to_string(Task t);
std::string_view to_string(Condition c);
Task task_from_string(std::string_view s);
Condition condition_from_string(std::string_view s);

struct Hyperparameters {
  double learning_rate = 0.5;
  double l2 = 1e-3;
  int max_epochs = 500;
  /// Stop once the L2 norm of the full gradient drops below this.
  double grad_tolerance = 1e-6;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

/// Dense outputs x features weights (row-major) plus one bias per output.
struct LinearParams {
  std::size_t n_outputs = 0;
  std::size_t n_features = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  LinearParams() = default;
  LinearParams(std::size_t outputs, std::size_t features)
      : n_outputs(outputs),
        n_features(features),
        weights(outputs * features, 0.0),
        bias(outputs, 0.0) {}

  double& w(std::size_t out, std::size_t feat) { return weights[out * n_features + feat]; }
  double w(std::size_t out, std::size_t feat) const {
    return weights[out * n_features + feat];
  }
  /// w_out . x + b_out
  double score(std::size_t out, const SparseVector& x) const;
  bool all_finite() const;
};

/// Numerically stable softmax, in place.
void softmax(std::span<double> logits);
double sigmoid(double z);

// Objectives. Each returns the loss and, when grad is non-null, writes the
// gradient (same shape as params). The bias is not regularized.

/// mean cross-entropy of softmax(W x + b) + (l2/2)|W|^2
double softmax_objective(const LinearParams& params, std::span<const SparseVector> x,
                         std::span<const int> labels, double l2,
                         LinearParams* grad = nullptr);

/// Row `output` of params as a binary logistic model:
/// mean log-loss + (l2/2)|w_output|^2. Only that row of grad is written.
double logistic_objective(const LinearParams& params, std::size_t output,
                          std::span<const SparseVector> x, std::span<const int> labels,
                          double l2, LinearParams* grad = nullptr);

/// mean (w.x + b - y)^2 + (l2/2)|w|^2 on a single-output model.
double squared_error_objective(const LinearParams& params,
                               std::span<const SparseVector> x,
                               std::span<const double> targets, double l2,
                               LinearParams* grad = nullptr);

struct TrainingMeta {
  int epochs = 0;
  double learning_rate = 0.0;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  /// Loss before every update, then the final loss.
  std::vector<double> loss_trace;
  std::vector<std::string> warnings;
  /// Number and fingerprint of the training documents.
  std::size_t n_train = 0;
  std::uint64_t input_fingerprint = 0;
};

struct TrainedModel {
  Task task = Task::intended;
  Condition condition = Condition::full;
  Vectorizer vectorizer;
  LinearParams params;
  TrainingMeta meta;
};

/// K-class softmax regression by full-batch gradient descent from zero
/// weights. Labels are class indices in [0, n_classes).
TrainedModel train_softmax(std::span<const SparseVector> x, std::span<const int> labels,
                           std::size_t n_classes, std::size_t n_features,
                           const Hyperparameters& hyper = {});

/// train_softmax over the six emotions. Throws missing_class when an emotion has no example and
/// divergence when the loss becomes non-finite.
TrainedModel train_intended(std::span<const SparseVector> x, std::span<const Emotion> labels,
                            std::size_t n_features, const Hyperparameters& hyper = {});

/// Six independent one-vs-rest binary logistic models. An emotion with no
/// positive (or no negative) example becomes a constant predictor and a
/// warning is recorded.
TrainedModel train_evoked(std::span<const SparseVector> x, std::span<const LabelSet> labels,
                          std::size_t n_features, const Hyperparameters& hyper = {});

/// Linear regression on MSE + L2; predictions are clamped to [0,1].
TrainedModel train_va(std::span<const SparseVector> x, std::span<const double> targets,
                      std::size_t n_features, Task task = Task::valence,
                      const Hyperparameters& hyper = {});

inline constexpr double kMultiLabelThreshold = 0.5;
/// Logit used for constant one-vs-rest predictors.
inline constexpr double kDegenerateLogit = 20.0;

std::vector<double> predict_proba(const TrainedModel& model, const SparseVector& x);
/// Argmax; ties resolve to the lowest canonical index.
Emotion predict_intended(const TrainedModel& model, const SparseVector& x);
LabelSet predict_evoked(const TrainedModel& model, const SparseVector& x);
/// Clamped to [0,1].
double predict_value(const TrainedModel& model, const SparseVector& x);

/// Versioned JSON model file.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(std::string_view json);

}  // namespace emosem
