#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "emosem/emotion.hpp"

namespace emosem {

struct ClipSpec {
  std::string clip_id;
  std::string title;
  Emotion intended = Emotion::sadness;
  double duration_seconds = 0.0;
  std::string source_note;

  friend bool operator==(const ClipSpec&, const ClipSpec&) = default;
};

/// One participant's response to one clip.
struct ResponseRecord {
  std::string participant_id;
  std::string clip_id;
  std::optional<std::string> transcript;
  std::optional<std::string> audio_ref;
  Emotion intended = Emotion::sadness;
  RatingVector evoked{};
  double valence = 0.0;  // normalized to [0,1]
  double arousal = 0.0;  // normalized to [0,1]

  int rating(Emotion e) const { return evoked[index_of(e)]; }
  /// "participant_id/clip_id"; unique within a corpus.
  std::string key() const { return participant_id + "/" + clip_id; }

  friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

/// Generator bookkeeping: the sentences each synthetic transcript was
/// built from, by role.
struct GoldPartition {
  std::vector<std::string> descriptive;
  std::vector<std::string> expressive;

  friend bool operator==(const GoldPartition&, const GoldPartition&) = default;
};

struct Corpus {
  std::vector<ClipSpec> clips;
  std::vector<ResponseRecord> records;
  /// "real" or "synthetic:<config hash>".
  std::string provenance = "real";
  /// Keyed by ResponseRecord::key(); present only for synthetic corpora.
  std::map<std::string, GoldPartition> gold;

  const ClipSpec* find_clip(std::string_view clip_id) const;
  /// Sorted, de-duplicated participant ids.
  std::vector<std::string> participants() const;
  bool is_synthetic() const { return provenance.starts_with("synthetic"); }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Throws ErrorCode::invariant / ErrorCode::reference naming the offending
/// record and field.
void validate(const ClipSpec& clip);
void validate(const ResponseRecord& record);
void validate(const Corpus& corpus);

/// Sidecar files live next to the records file: for "c.jsonl" they are
/// "c.clips.csv", "c.gold.jsonl" and "c.provenance.json".
struct CorpusPaths {
  std::filesystem::path records;
  std::filesystem::path clips;
  std::filesystem::path gold;
  std::filesystem::path provenance;

  static CorpusPaths for_records(const std::filesystem::path& records);
};

/// Loads records (JSONL) plus the clips CSV sidecar, and the gold and
/// provenance sidecars when present. Parse errors carry the line number.
Corpus load_corpus(const std::filesystem::path& records_path);
Corpus load_corpus(const CorpusPaths& paths);

/// Writes records, clips, and (for synthetic corpora) gold and provenance
/// sidecars. Output is deterministic.
void write_corpus(const Corpus& corpus, const std::filesystem::path& records_path);

/// Parsing and rendering of a single JSONL line / the clips CSV; exposed
/// for tests and the bindings.
ResponseRecord parse_record_line(std::string_view line, std::size_t line_number = 0);
std::string render_record_line(const ResponseRecord& record);
std::vector<ClipSpec> parse_clips_csv(std::string_view text);
std::string render_clips_csv(const std::vector<ClipSpec>& clips);

struct SplitAssignment {
  std::set<std::string> train;
  std::set<std::string> validation;
  std::set<std::string> test;
  std::uint64_t seed = 0;

  enum class Part { train, validation, test };
  Part part_of(const std::string& participant_id) const;

  friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

/// Participant-level thirds. Remainders go to train first, then
/// validation: 97 participants -> 33/32/32, 98 -> 33/33/32.
SplitAssignment split_by_participant(const Corpus& corpus, std::uint64_t seed);
SplitAssignment split_participants(std::vector<std::string> participants,
                                   std::uint64_t seed);

inline constexpr int kDefaultEvokedThreshold = 1;

/// { e : rating(e) >= threshold }.
LabelSet binarize_evoked(const RatingVector& evoked,
                         int threshold = kDefaultEvokedThreshold);

}  // namespace emosem
