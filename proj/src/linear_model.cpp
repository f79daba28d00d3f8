#include "emosem/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

#include "emosem/error.hpp"
#include "emosem/text.hpp"

namespace emosem {

using nlohmann::ordered_json;

std::string_view to_string(Task t) {
  switch (t) {
    case Task::intended: return "intended";
    case Task::evoked: return "evoked";
    case Task::valence: return "valence";
    case Task::arousal: return "arousal";
  }
  return "?";
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::full: return "full";
    case Condition::descriptive: return "descriptive";
    case Condition::expressive: return "expressive";
  }
  return "?";
}

Task task_from_string(std::string_view s) {
  for (Task t : {Task::intended, Task::evoked, Task::valence, Task::arousal}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::parse, "unknown task '" + std::string(s) + "'");
}

Condition condition_from_string(std::string_view s) {
  for (Condition c : {Condition::full, Condition::descriptive, Condition::expressive}) {
    if (to_string(c) == s) return c;
  }
  throw Error(ErrorCode::parse, "unknown condition '" + std::string(s) +
                                    "' (expected full, descriptive or expressive)");
}

double LinearParams::score(std::size_t out, const SparseVector& x) const {
  double s = bias[out];
  const double* row = weights.data() + out * n_features;
  for (const auto& [i, v] : x.entries) {
    if (i < n_features) s += row[i] * v;
  }
  return s;
}

bool LinearParams::all_finite() const {
  auto fin = [](double v) { return std::isfinite(v); };
  return std::all_of(weights.begin(), weights.end(), fin) &&
         std::all_of(bias.begin(), bias.end(), fin);
}

void softmax(std::span<double> logits) {
  if (logits.empty()) return;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - m);
    sum += z;
  }
  for (double& z : logits) z /= sum;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^z)
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double row_sq_norm(const LinearParams& p, std::size_t out) {
  double s = 0.0;
  for (std::size_t j = 0; j < p.n_features; ++j) s += p.w(out, j) * p.w(out, j);
  return s;
}

void check_lengths(std::size_t nx, std::size_t ny) {
  if (nx != ny) {
    throw Error(ErrorCode::shape_mismatch, std::to_string(nx) + " inputs but " +
                                               std::to_string(ny) + " labels");
  }
}

void prepare_grad(const LinearParams& params, LinearParams* grad) {
  if (grad && (grad->n_outputs != params.n_outputs || grad->n_features != params.n_features)) {
    *grad = LinearParams(params.n_outputs, params.n_features);
  }
}

void zero_row(LinearParams& g, std::size_t out) {
  std::fill_n(g.weights.begin() + static_cast<std::ptrdiff_t>(out * g.n_features), g.n_features,
              0.0);
  g.bias[out] = 0.0;
}

double grad_norm(const LinearParams& g) {
  double s = 0.0;
  for (double v : g.weights) s += v * v;
  for (double v : g.bias) s += v * v;
  return std::sqrt(s);
}

/// Full-batch descent on `objective`; `frozen` rows are never updated.
void descend(LinearParams& params, const Hyperparameters& hyper,
             const std::function<double(const LinearParams&, LinearParams*)>& objective,
             TrainingMeta& meta) {
  meta.learning_rate = hyper.learning_rate;
  meta.l2 = hyper.l2;
  LinearParams grad(params.n_outputs, params.n_features);
  int epoch = 0;
  for (; epoch < hyper.max_epochs; ++epoch) {
    const double loss = objective(params, &grad);
    if (!std::isfinite(loss) || !grad.all_finite()) {
      throw Error(ErrorCode::divergence, "loss became non-finite at epoch " +
                                             std::to_string(epoch) + " (learning_rate " +
                                             std::to_string(hyper.learning_rate) + ")");
    }
    meta.loss_trace.push_back(loss);
    if (grad_norm(grad) < hyper.grad_tolerance) break;
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
      params.weights[i] -= hyper.learning_rate * grad.weights[i];
    }
    for (std::size_t i = 0; i < params.bias.size(); ++i) {
      params.bias[i] -= hyper.learning_rate * grad.bias[i];
    }
  }
  meta.epochs = epoch;
  const double final_loss = objective(params, nullptr);
  if (!std::isfinite(final_loss) || !params.all_finite()) {
    throw Error(ErrorCode::divergence, "loss became non-finite after " + std::to_string(epoch) +
                                           " epochs (learning_rate " +
                                           std::to_string(hyper.learning_rate) + ")");
  }
  if (epoch == hyper.max_epochs) meta.loss_trace.push_back(final_loss);
  meta.final_loss = final_loss;
}

void check_hyper(const Hyperparameters& h) {
  if (!(h.learning_rate > 0.0) || !std::isfinite(h.learning_rate)) {
    throw Error(ErrorCode::invariant, "learning_rate must be > 0");
  }
  if (!(h.l2 >= 0.0)) throw Error(ErrorCode::invariant, "l2 must be >= 0");
  if (h.max_epochs < 0) throw Error(ErrorCode::invariant, "max_epochs must be >= 0");
}

}  // namespace

double softmax_objective(const LinearParams& params, std::span<const SparseVector> x,
                         std::span<const int> labels, double l2, LinearParams* grad) {
  check_lengths(x.size(), labels.size());
  prepare_grad(params, grad);
  if (grad) {
    std::fill(grad->weights.begin(), grad->weights.end(), 0.0);
    std::fill(grad->bias.begin(), grad->bias.end(), 0.0);
  }
  const std::size_t k = params.n_outputs;
  const double n = static_cast<double>(std::max<std::size_t>(x.size(), 1));
  std::vector<double> z(k);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t c = 0; c < k; ++c) z[c] = params.score(c, x[i]);
    const double m = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - m);
    lse = m + std::log(lse);
    const auto y = static_cast<std::size_t>(labels[i]);
    loss += lse - z[y];
    if (grad) {
      for (std::size_t c = 0; c < k; ++c) {
        const double r = (std::exp(z[c] - lse) - (c == y ? 1.0 : 0.0)) / n;
        grad->bias[c] += r;
        for (const auto& [j, v] : x[i].entries) {
          if (j < params.n_features) grad->w(c, j) += r * v;
        }
      }
    }
  }
  loss /= n;
  for (std::size_t c = 0; c < k; ++c) loss += 0.5 * l2 * row_sq_norm(params, c);
  if (grad) {
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
      grad->weights[i] += l2 * params.weights[i];
    }
  }
  return loss;
}

double logistic_objective(const LinearParams& params, std::size_t output,
                          std::span<const SparseVector> x, std::span<const int> labels,
                          double l2, LinearParams* grad) {
  check_lengths(x.size(), labels.size());
  prepare_grad(params, grad);
  if (grad) zero_row(*grad, output);
  const double n = static_cast<double>(std::max<std::size_t>(x.size(), 1));
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = params.score(output, x[i]);
    const double y = labels[i] ? 1.0 : 0.0;
    loss += softplus(z) - y * z;
    if (grad) {
      const double r = (sigmoid(z) - y) / n;
      grad->bias[output] += r;
      for (const auto& [j, v] : x[i].entries) {
        if (j < params.n_features) grad->w(output, j) += r * v;
      }
    }
  }
  loss = loss / n + 0.5 * l2 * row_sq_norm(params, output);
  if (grad) {
    for (std::size_t j = 0; j < params.n_features; ++j) {
      grad->w(output, j) += l2 * params.w(output, j);
    }
  }
  return loss;
}

double squared_error_objective(const LinearParams& params, std::span<const SparseVector> x,
                               std::span<const double> targets, double l2,
                               LinearParams* grad) {
  check_lengths(x.size(), targets.size());
  prepare_grad(params, grad);
  if (grad) zero_row(*grad, 0);
  const double n = static_cast<double>(std::max<std::size_t>(x.size(), 1));
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = params.score(0, x[i]) - targets[i];
    loss += r * r;
    if (grad) {
      const double g = 2.0 * r / n;
      grad->bias[0] += g;
      for (const auto& [j, v] : x[i].entries) {
        if (j < params.n_features) grad->w(0, j) += g * v;
      }
    }
  }
  loss = loss / n + 0.5 * l2 * row_sq_norm(params, 0);
  if (grad) {
    for (std::size_t j = 0; j < params.n_features; ++j) grad->w(0, j) += l2 * params.w(0, j);
  }
  return loss;
}

TrainedModel train_softmax(std::span<const SparseVector> x, std::span<const int> labels,
                           std::size_t n_classes, std::size_t n_features,
                           const Hyperparameters& hyper) {
  check_hyper(hyper);
  check_lengths(x.size(), labels.size());
  if (x.empty()) throw Error(ErrorCode::empty_corpus, "no training examples");
  if (n_classes < 2) throw Error(ErrorCode::invariant, "need at least 2 classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes) {
      throw Error(ErrorCode::invariant, "label " + std::to_string(labels[i]) + " at example " +
                                            std::to_string(i) + " is outside [0, " +
                                            std::to_string(n_classes) + ")");
    }
  }
  TrainedModel m;
  m.task = Task::intended;
  m.params = LinearParams(n_classes, n_features);
  m.meta.n_train = x.size();
  descend(
      m.params, hyper,
      [&](const LinearParams& p, LinearParams* g) {
        return softmax_objective(p, x, labels, hyper.l2, g);
      },
      m.meta);
  return m;
}

TrainedModel train_intended(std::span<const SparseVector> x, std::span<const Emotion> labels,
                            std::size_t n_features, const Hyperparameters& hyper) {
  check_lengths(x.size(), labels.size());
  std::array<std::size_t, kNumEmotions> counts{};
  std::vector<int> y;
  y.reserve(labels.size());
  for (Emotion e : labels) {
    ++counts[index_of(e)];
    y.push_back(static_cast<int>(index_of(e)));
  }
  for (Emotion e : kAllEmotions) {
    if (counts[index_of(e)] == 0) {
      throw Error(ErrorCode::missing_class, "training split has no example of intended emotion '" +
                                                std::string(to_string(e)) + "'");
    }
  }
  auto m = train_softmax(x, y, kNumEmotions, n_features, hyper);
  m.task = Task::intended;
  return m;
}

TrainedModel train_evoked(std::span<const SparseVector> x, std::span<const LabelSet> labels,
                          std::size_t n_features, const Hyperparameters& hyper) {
  check_hyper(hyper);
  check_lengths(x.size(), labels.size());
  if (x.empty()) throw Error(ErrorCode::empty_corpus, "no training examples");

  TrainedModel m;
  m.task = Task::evoked;
  m.params = LinearParams(kNumEmotions, n_features);
  m.meta.n_train = x.size();

  std::array<std::vector<int>, kNumEmotions> y;
  std::vector<std::size_t> active;
  for (Emotion e : kAllEmotions) {
    const std::size_t o = index_of(e);
    y[o].reserve(labels.size());
    std::size_t pos = 0;
    for (const auto& s : labels) {
      y[o].push_back(s.contains(e) ? 1 : 0);
      pos += s.contains(e) ? 1 : 0;
    }
    if (pos == 0 || pos == labels.size()) {
      const bool all_pos = pos == labels.size();
      m.params.bias[o] = all_pos ? kDegenerateLogit : -kDegenerateLogit;
      m.meta.warnings.push_back("evoked emotion '" + std::string(to_string(e)) + "' has no " +
                                (all_pos ? "negative" : "positive") +
                                " training example; using a constant " +
                                (all_pos ? "positive" : "negative") + " predictor");
    } else {
      active.push_back(o);
    }
  }
  // The rows are independent, so descending on their sum is the same as
  // descending on each one.
  descend(
      m.params, hyper,
      [&](const LinearParams& p, LinearParams* g) {
        if (g) {
          for (std::size_t o = 0; o < kNumEmotions; ++o) zero_row(*g, o);
        }
        double loss = 0.0;
        for (std::size_t o : active) loss += logistic_objective(p, o, x, y[o], hyper.l2, g);
        return loss;
      },
      m.meta);
  return m;
}

TrainedModel train_va(std::span<const SparseVector> x, std::span<const double> targets,
                      std::size_t n_features, Task task, const Hyperparameters& hyper) {
  check_hyper(hyper);
  check_lengths(x.size(), targets.size());
  if (task != Task::valence && task != Task::arousal) {
    throw Error(ErrorCode::invariant, "train_va needs task valence or arousal");
  }
  if (x.size() < 2) {
    throw Error(ErrorCode::empty_corpus, "regression needs at least 2 examples, got " +
                                             std::to_string(x.size()));
  }
  TrainedModel m;
  m.task = task;
  m.params = LinearParams(1, n_features);
  m.meta.n_train = x.size();
  descend(
      m.params, hyper,
      [&](const LinearParams& p, LinearParams* g) {
        return squared_error_objective(p, x, targets, hyper.l2, g);
      },
      m.meta);
  return m;
}

std::vector<double> predict_proba(const TrainedModel& model, const SparseVector& x) {
  const auto& p = model.params;
  std::vector<double> out(p.n_outputs);
  for (std::size_t o = 0; o < p.n_outputs; ++o) out[o] = p.score(o, x);
  switch (model.task) {
    case Task::intended: softmax(out); break;
    case Task::evoked:
      for (double& v : out) v = sigmoid(v);
      break;
    case Task::valence:
    case Task::arousal:
      for (double& v : out) v = std::clamp(v, 0.0, 1.0);
      break;
  }
  return out;
}

Emotion predict_intended(const TrainedModel& model, const SparseVector& x) {
  if (model.task != Task::intended) {
    throw Error(ErrorCode::shape_mismatch, "model task is " + std::string(to_string(model.task)));
  }
  const auto& p = model.params;
  std::size_t best = 0;
  double best_score = p.score(0, x);
  for (std::size_t o = 1; o < p.n_outputs; ++o) {
    const double s = p.score(o, x);
    if (s > best_score) {
      best = o;
      best_score = s;
    }
  }
  return emotion_at(best);
}

LabelSet predict_evoked(const TrainedModel& model, const SparseVector& x) {
  if (model.task != Task::evoked) {
    throw Error(ErrorCode::shape_mismatch, "model task is " + std::string(to_string(model.task)));
  }
  LabelSet out;
  for (Emotion e : kAllEmotions) {
    if (sigmoid(model.params.score(index_of(e), x)) >= kMultiLabelThreshold) out.insert(e);
  }
  return out;
}

double predict_value(const TrainedModel& model, const SparseVector& x) {
  if (model.task != Task::valence && model.task != Task::arousal) {
    throw Error(ErrorCode::shape_mismatch, "model task is " + std::string(to_string(model.task)));
  }
  return std::clamp(model.params.score(0, x), 0.0, 1.0);
}

namespace {
constexpr std::string_view kModelFormat = "emosem-model";
constexpr int kModelVersion = 1;
}  // namespace

std::string model_to_json(const TrainedModel& model) {
  ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["task"] = to_string(model.task);
  j["condition"] = to_string(model.condition);
  const auto& v = model.vectorizer;
  j["vectorizer"] = {{"min_df", v.min_df()},
                     {"max_features", v.max_features()},
                     {"fit_fingerprint", text::hex64(v.fit_fingerprint())},
                     {"vocabulary", v.vocabulary()},
                     {"idf", v.idf()}};
  const auto& p = model.params;
  ordered_json rows = ordered_json::array();
  for (std::size_t o = 0; o < p.n_outputs; ++o) {
    rows.push_back(std::vector<double>(
        p.weights.begin() + static_cast<std::ptrdiff_t>(o * p.n_features),
        p.weights.begin() + static_cast<std::ptrdiff_t>((o + 1) * p.n_features)));
  }
  j["n_outputs"] = p.n_outputs;
  j["n_features"] = p.n_features;
  j["weights"] = std::move(rows);
  j["bias"] = p.bias;
  const auto& m = model.meta;
  j["training"] = {{"epochs", m.epochs},
                   {"learning_rate", m.learning_rate},
                   {"l2", m.l2},
                   {"seed", m.seed},
                   {"final_loss", m.final_loss},
                   {"n_train", m.n_train},
                   {"input_fingerprint", text::hex64(m.input_fingerprint)},
                   {"warnings", m.warnings}};
  return j.dump(1) + "\n";
}

namespace {
std::uint64_t parse_hex(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used, 16);
  if (used != s.size()) throw Error(ErrorCode::parse, "bad hex value '" + s + "'");
  return v;
}
}  // namespace

TrainedModel model_from_json(std::string_view text_in) {
  ordered_json j;
  try {
    j = ordered_json::parse(text_in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw Error(ErrorCode::parse, "not an emosem model file");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelVersion) {
      throw Error(ErrorCode::parse, "unsupported model version " + std::to_string(version));
    }
    TrainedModel m;
    m.task = task_from_string(j.at("task").get<std::string>());
    m.condition = condition_from_string(j.at("condition").get<std::string>());
    const auto& v = j.at("vectorizer");
    m.vectorizer = Vectorizer::from_parts(
        v.at("vocabulary").get<std::vector<std::string>>(), v.at("idf").get<std::vector<double>>(),
        v.at("min_df").get<std::size_t>(), v.at("max_features").get<std::size_t>(),
        parse_hex(v.at("fit_fingerprint").get<std::string>()));
    const auto outputs = j.at("n_outputs").get<std::size_t>();
    const auto features = j.at("n_features").get<std::size_t>();
    m.params = LinearParams(outputs, features);
    const auto& rows = j.at("weights");
    if (rows.size() != outputs) throw Error(ErrorCode::parse, "weights has wrong row count");
    for (std::size_t o = 0; o < outputs; ++o) {
      const auto row = rows[o].get<std::vector<double>>();
      if (row.size() != features) throw Error(ErrorCode::parse, "weights has wrong row length");
      std::copy(row.begin(), row.end(),
                m.params.weights.begin() + static_cast<std::ptrdiff_t>(o * features));
    }
    m.params.bias = j.at("bias").get<std::vector<double>>();
    if (m.params.bias.size() != outputs) throw Error(ErrorCode::parse, "bias has wrong length");
    const auto& t = j.at("training");
    m.meta.epochs = t.at("epochs").get<int>();
    m.meta.learning_rate = t.at("learning_rate").get<double>();
    m.meta.l2 = t.at("l2").get<double>();
    m.meta.seed = t.at("seed").get<std::uint64_t>();
    m.meta.final_loss = t.at("final_loss").get<double>();
    m.meta.n_train = t.at("n_train").get<std::size_t>();
    m.meta.input_fingerprint = parse_hex(t.at("input_fingerprint").get<std::string>());
    m.meta.warnings = t.at("warnings").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::parse, "malformed hex fingerprint in model file");
  }
}

}  // namespace emosem
