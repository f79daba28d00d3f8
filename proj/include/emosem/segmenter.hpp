#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emosem {

class LanguageModel;

enum class SegmentSource { llm, rule_mock, random, gold, human };

std::string_view to_string(SegmentSource s);
SegmentSource segment_source_from_string(std::string_view s);

/// A transcript split into its descriptive and expressive semantics. The
/// parts may overlap.
struct SegmentedTranscript {
  std::string descriptive;
  std::string expressive;
  /// Unset until coverage_check has been applied.
  std::optional<double> coverage;
  SegmentSource source = SegmentSource::llm;

  friend bool operator==(const SegmentedTranscript&, const SegmentedTranscript&) = default;
};

/// The segmentation instruction text, without the transcript block.
std::string_view segmentation_instructions();

/// Instruction text followed by the transcript fenced with "####" lines.
/// Throws ErrorCode::empty_transcript for blank input.
std::string build_prompt(std::string_view transcript);

/// Renders segments in the answer format the prompt asks for.
std::string render_segmentation(const SegmentedTranscript& seg);

/// Extracts the first <answer> block's <descriptive> and <expressive>
/// parts, trimmed. Text outside the block is ignored.
///
/// Throws missing_answer_block, missing_role_tag (naming the tag) or
/// empty_segments.
SegmentedTranscript parse_segmentation(std::string_view completion);

/// Fraction of the transcript's word multiset covered by the additive
/// union of both parts' word multisets. Empty transcript -> 1.0.
double coverage_check(std::string_view transcript, const SegmentedTranscript& seg);

struct SegmentOptions {
  double coverage_threshold = 0.9;
  /// Attempts after the first one.
  int max_retries = 2;
};

/// build_prompt -> complete -> parse -> coverage_check, retrying on parse
/// or coverage failure. Throws ErrorCode::segmentation_failed carrying the
/// last failure; never returns a partial result.
SegmentedTranscript segment(std::string_view transcript, const LanguageModel& llm,
                            const SegmentOptions& options = {});

/// Deterministic lexicon rule. A sentence is expressive when it has a
/// first-person word and a feeling word, or a feeling verb ("feel",
/// "felt"). An expressive sentence with two or more content words (not
/// stopwords, pronouns, intensifiers or feeling words) also goes to the
/// descriptive part.
SegmentedTranscript rule_based_segment(std::string_view transcript);

/// Each sentence independently: descriptive 0.45, expressive 0.45, both 0.10.
SegmentedTranscript random_segment(std::string_view transcript, std::uint64_t seed);

/// Word-multiset F1 between two texts; 1.0 when both are empty.
double word_f1(std::string_view a, std::string_view b);

/// A row of the segmentation cache / human annotation file.
struct SegmentRow {
  std::string participant_id;
  std::string clip_id;
  SegmentedTranscript segments;
  std::string transcript_hash;  // hex FNV-1a of the transcript, may be empty
  std::string backend_id;       // may be empty

  std::string key() const { return participant_id + "/" + clip_id; }
};

std::string transcript_hash(std::string_view transcript);

std::string render_segment_row(const SegmentRow& row);
SegmentRow parse_segment_row(std::string_view line, std::size_t line_number = 0);

std::vector<SegmentRow> load_segment_rows(const std::filesystem::path& path);
void write_segment_rows(const std::vector<SegmentRow>& rows,
                        const std::filesystem::path& path);

/// Content-addressed segmentation cache keyed by (transcript hash, backend id).
class SegmentCache {
 public:
  SegmentCache() = default;
  explicit SegmentCache(const std::vector<SegmentRow>& rows);

  const SegmentedTranscript* find(std::string_view transcript,
                                  std::string_view backend_id) const;
  void insert(std::string_view transcript, std::string_view backend_id,
              SegmentedTranscript seg);
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, SegmentedTranscript> entries_;
};

}  // namespace emosem
