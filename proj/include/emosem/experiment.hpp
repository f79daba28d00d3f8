#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emosem/agreement.hpp"
#include "emosem/backends.hpp"
#include "emosem/linear_model.hpp"
#include "emosem/metrics.hpp"
#include "emosem/segmenter.hpp"
#include "emosem/stats.hpp"
#include "emosem/synth.hpp"

namespace emosem {

inline BackendConfig mock_backend(std::string flavor) {
  BackendConfig cfg;
  cfg.kind = BackendKind::mock;
  cfg.model_name = std::move(flavor);
  return cfg;
}

struct ExperimentConfig {
  /// Records file; when empty a corpus is synthesized from `synth`.
  std::filesystem::path corpus_path;
  SynthConfig synth;
  BackendConfig asr = mock_backend("fixture");
  BackendConfig llm = mock_backend("rule");
  BackendConfig embed = mock_backend("hashbow");
  SegmentOptions segmenter;
  int threshold = kDefaultEvokedThreshold;
  Hyperparameters hyper_intended{.learning_rate = 2.0, .l2 = 1e-3, .max_epochs = 1000};
  Hyperparameters hyper_evoked{.learning_rate = 2.0, .l2 = 1e-4, .max_epochs = 1000};
  /// Squared loss on unit-norm features diverges for learning rates above 0.5.
  Hyperparameters hyper_va{.learning_rate = 0.45, .l2 = 1e-2, .max_epochs = 1000};
  std::size_t min_df = 1;
  std::size_t max_features = 0;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<Condition> conditions{Condition::full, Condition::descriptive,
                                    Condition::expressive};
  /// Segmentation files with source "human" to compare against.
  std::vector<std::filesystem::path> human_segments;
  std::filesystem::path output_dir = "emosem_out";
  /// Bound on concurrent record-level backend calls.
  int parallelism = 4;
  int figure_participants = 3;
  HighestTieRule tie_rule = HighestTieRule::favor_intended;
};

/// Throws ErrorCode::config.
void validate(const ExperimentConfig& config);

/// Reads the TOML config file. Throws ErrorCode::io when the file cannot
/// be read and ErrorCode::config on bad keys or values.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Canonical JSON of every field, used for the config hash.
std::string config_to_json(const ExperimentConfig& config);
std::string experiment_config_hash(const ExperimentConfig& config);

struct CellResult {
  Task task = Task::intended;
  Condition condition = Condition::full;
  std::uint64_t seed = 0;
  std::optional<ClassificationMetrics> classification;
  std::optional<RegressionMetrics> regression;
  /// Record keys of the test split, aligned with squared_errors.
  std::vector<std::string> test_keys;
  TrainingMeta meta;
  std::size_t vocabulary_size = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population std over seeds
};

struct CellSummary {
  Task task = Task::intended;
  Condition condition = Condition::full;
  /// Classification: macro P/R/F1 and micro F1. Regression: mse, mae.
  std::map<std::string, MeanStd> metrics;
};

struct WilcoxonRow {
  std::string name;  // e.g. "valence/seed-1", "valence/record-mean"
  Task target = Task::valence;
  WilcoxonResult result;
  double mse_expressive = 0.0;
  double mse_descriptive = 0.0;
};

struct ConditionComparison {
  Task task = Task::intended;
  /// descriptive - expressive of the mean headline metric (macro F1 or MSE).
  double descriptive_minus_expressive = 0.0;
  double descriptive_mean = 0.0;
  double expressive_mean = 0.0;
};

struct AgreementRow {
  std::string pair_name;
  double descriptive_mean = 0.0;
  double expressive_mean = 0.0;
  std::size_t n_items = 0;
};

struct IsolationCheck {
  bool checked = false;
  bool passed = true;
  /// Tokens of the descriptive-condition vocabulary that occur in
  /// expressive segments, and vice versa.
  std::vector<std::string> leaked_tokens;
  /// Training-input fingerprints matched the split's segment texts.
  bool fingerprints_match = true;
  std::string note;
};

struct ExperimentReport {
  std::string config_hash;
  std::string corpus_provenance;
  std::string backend_llm;
  std::string backend_embed;
  DatasetStats dataset;
  std::vector<AgreementRow> segmentation_agreement;
  double mean_segment_coverage = 0.0;
  std::vector<CellResult> cells;
  std::vector<CellSummary> summaries;
  std::vector<ConditionComparison> comparisons;
  std::vector<WilcoxonRow> wilcoxon;
  std::string wilcoxon_note;
  IsolationCheck isolation;
  std::vector<std::string> warnings;
  std::vector<std::string> files;
  std::string generated_at;

  const CellSummary* summary(Task task, Condition condition) const;
};

/// The full study: transcribe missing transcripts, segment (cached), split
/// per seed, train and evaluate every task x condition, compute dataset
/// statistics, agreement and Wilcoxon comparisons, and write the output
/// directory. Stage failures are rethrown as StageError.
ExperimentReport run(const ExperimentConfig& config);

/// Metrics-only JSON (no timestamps); byte-identical for identical inputs.
std::string metrics_json(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report);
std::string report_markdown(const ExperimentReport& report);

/// Writes figures/fig2_<participant>.csv (6 clips x 6 emotions) for the
/// first n participants and figures/fig3_valence_arousal.csv. Returns the
/// written paths.
std::vector<std::filesystem::path> emit_figures(const Corpus& corpus,
                                                const std::filesystem::path& out_dir,
                                                int n_participants = 3);

/// Writes text to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace emosem
