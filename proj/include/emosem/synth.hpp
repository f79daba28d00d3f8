#pragma once

#include <cstdint>
#include <string>

#include "emosem/corpus.hpp"
#include "emosem/segmenter.hpp"

namespace emosem {

/// Parameters of the desk-scale corpus generator.
struct SynthConfig {
  int n_participants = 30;
  int clips_per_emotion = 2;
  /// Probability that a descriptive sentence draws its vocabulary from the
  /// watched clip (otherwise from a random clip of another emotion).
  double descriptive_signal = 0.9;
  /// Probability that an expressive sentence names the emotion it was
  /// planned for, at the matching intensity (otherwise a random emotion).
  double expressive_signal = 0.9;
  /// Probability that a response evokes extra, non-intended emotions.
  double evoked_noise = 0.5;
  std::uint64_t seed = 42;
  /// Descriptive sentences per transcript are drawn from [min, max].
  int min_descriptive_sentences = 2;
  int max_descriptive_sentences = 3;
  /// Cap on expressive sentences; 0 yields transcripts with no expressive part.
  int max_expressive_sentences = 3;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

/// Throws ErrorCode::invariant on out-of-range fields.
void validate(const SynthConfig& config);

/// Stable hash of every config field; recorded in corpus provenance.
std::string config_hash(const SynthConfig& config);

// Synthetic valence/arousal map constants.
inline constexpr double kVaNoiseHalfWidth = 0.05;

/// Positivity weight of each emotion for the valence map: joy +1,
/// surprise 0, all others -1.
double valence_weight(Emotion e);

/// Noise-free valence: 0.5 + 0.5 * sum_e w_e r_e / max(6, sum_e r_e).
double valence_from_ratings(const RatingVector& evoked);

/// Noise-free arousal: max rating / 6.
double arousal_from_ratings(const RatingVector& evoked);

/// Generates a corpus with planted descriptive/expressive signal. Every
/// participant watches one clip per emotion. Fully deterministic under
/// config.seed.
Corpus synthesize_corpus(const SynthConfig& config);

/// The 12 clip specs (two per emotion) the generator draws from when
/// clips_per_emotion <= 2; extra clips reuse their emotion's scene pools.
std::vector<ClipSpec> synthetic_clips(int clips_per_emotion);

/// True when no word can appear in both a descriptive and an expressive
/// generator template.
bool template_vocabularies_disjoint();

/// The generator's own role partition for a record of a synthetic corpus.
/// Throws ErrorCode::not_synthetic for records without bookkeeping.
SegmentedTranscript gold_segments(const Corpus& corpus, const ResponseRecord& record);

}  // namespace emosem
