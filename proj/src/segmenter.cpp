#include "emosem/segmenter.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emosem/backends.hpp"
#include "emosem/error.hpp"
#include "emosem/lexicon.hpp"
#include "emosem/rng.hpp"
#include "emosem/text.hpp"

namespace emosem {

using json = nlohmann::ordered_json;

std::string_view to_string(SegmentSource s) {
  switch (s) {
    case SegmentSource::llm: return "llm";
    case SegmentSource::rule_mock: return "rule_mock";
    case SegmentSource::random: return "random";
    case SegmentSource::gold: return "gold";
    case SegmentSource::human: return "human";
  }
  return "llm";
}

SegmentSource segment_source_from_string(std::string_view s) {
  for (auto src : {SegmentSource::llm, SegmentSource::rule_mock, SegmentSource::random,
                   SegmentSource::gold, SegmentSource::human}) {
    if (s == to_string(src)) return src;
  }
  throw Error(ErrorCode::parse, "unknown segment source '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- prompt

namespace {

constexpr std::string_view kInstructions =
    "The user will provide a paragraph describing their feelings towards a particular movie, "
    "delimited with ```####```.\n"
    "\n"
    "Your task is to segment the paragraph into two parts according to the type of content: "
    "descriptive segments and expressive segments.\n"
    "\n"
    "Descriptive segments refer to elements or clauses that provide factual or narrative "
    "information about the movie content without explicitly reflecting personal emotions or "
    "opinions.\n"
    "\n"
    "Expressive segments refer to elements or clauses that convey personal feelings, attitudes, "
    "or opinions. These segments reflect individual reactions, emotions, and perceptions, or the "
    "intensity of these emotions.\n"
    "\n"
    "The two parts (descriptive segments and expressive segments) can overlap, but all clauses "
    "of the given paragraph must be contained in at least one of the two parts.\n"
    "\n"
    "Output your answer in the following format:\n"
    "\n"
    "<answer>\n"
    "  <descriptive> [descriptive segments] </descriptive>\n"
    "  <expressive> [expressive segments] </expressive>\n"
    "</answer>\n";

constexpr std::string_view kFence = "####";

}  // namespace

std::string_view segmentation_instructions() { return kInstructions; }

std::string build_prompt(std::string_view transcript) {
  if (text::trim(transcript).empty()) {
    throw Error(ErrorCode::empty_transcript, "cannot build a segmentation prompt for an empty transcript");
  }
  std::string prompt(kInstructions);
  prompt += '\n';
  prompt += kFence;
  prompt += '\n';
  prompt += transcript;
  prompt += '\n';
  prompt += kFence;
  prompt += '\n';
  return prompt;
}

std::string render_segmentation(const SegmentedTranscript& seg) {
  return "<answer>\n  <descriptive> " + seg.descriptive + " </descriptive>\n  <expressive> " +
         seg.expressive + " </expressive>\n</answer>";
}

// ---------------------------------------------------------------- parse

namespace {

std::string extract_role(std::string_view block, std::string_view role) {
  const std::string open = "<" + std::string(role) + ">";
  const std::string close = "</" + std::string(role) + ">";
  const auto begin = block.find(open);
  if (begin == std::string_view::npos) {
    throw Error(ErrorCode::missing_role_tag, "completion is missing the " + open + " tag");
  }
  const auto content = begin + open.size();
  const auto end = block.find(close, content);
  if (end == std::string_view::npos) {
    throw Error(ErrorCode::missing_role_tag, "completion is missing the " + close + " tag");
  }
  return std::string(text::trim(block.substr(content, end - content)));
}

}  // namespace

SegmentedTranscript parse_segmentation(std::string_view completion) {
  constexpr std::string_view kOpen = "<answer>";
  constexpr std::string_view kClose = "</answer>";
  const auto begin = completion.find(kOpen);
  if (begin == std::string_view::npos) {
    throw Error(ErrorCode::missing_answer_block, "completion has no <answer> block");
  }
  const auto content = begin + kOpen.size();
  const auto end = completion.find(kClose, content);
  if (end == std::string_view::npos) {
    throw Error(ErrorCode::missing_answer_block, "completion's <answer> block is not closed");
  }
  const std::string_view block = completion.substr(content, end - content);

  SegmentedTranscript seg;
  seg.descriptive = extract_role(block, "descriptive");
  seg.expressive = extract_role(block, "expressive");
  if (seg.descriptive.empty() && seg.expressive.empty()) {
    throw Error(ErrorCode::empty_segments, "both descriptive and expressive segments are empty");
  }
  return seg;
}

// ------------------------------------------------------------- coverage

double coverage_check(std::string_view transcript, const SegmentedTranscript& seg) {
  const auto words = text::words(transcript);
  if (words.empty()) return 1.0;
  std::map<std::string, std::size_t> available;
  for (auto part : {std::string_view(seg.descriptive), std::string_view(seg.expressive)}) {
    for (auto& w : text::words(part)) ++available[w];
  }
  std::size_t covered = 0;
  for (const auto& w : words) {
    auto it = available.find(w);
    if (it != available.end() && it->second > 0) {
      --it->second;
      ++covered;
    }
  }
  return static_cast<double>(covered) / static_cast<double>(words.size());
}

// -------------------------------------------------------------- segment

namespace {

SegmentSource source_for_backend(const std::string& id) {
  if (id == "mock-rule") return SegmentSource::rule_mock;
  if (id.starts_with("mock-random")) return SegmentSource::random;
  return SegmentSource::llm;
}

}  // namespace

SegmentedTranscript segment(std::string_view transcript, const LanguageModel& llm,
                            const SegmentOptions& options) {
  const std::string prompt = build_prompt(transcript);
  std::string last_failure;
  const int attempts = 1 + std::max(options.max_retries, 0);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    const std::string completion = llm.complete(prompt);
    try {
      SegmentedTranscript seg = parse_segmentation(completion);
      const double coverage = coverage_check(transcript, seg);
      if (coverage < options.coverage_threshold) {
        std::ostringstream msg;
        msg << "coverage " << coverage << " below threshold " << options.coverage_threshold;
        last_failure = msg.str();
        continue;
      }
      seg.coverage = coverage;
      seg.source = source_for_backend(llm.id());
      return seg;
    } catch (const Error& e) {
      last_failure = std::string(to_string(e.code())) + ": " + e.what();
    }
  }
  throw Error(ErrorCode::segmentation_failed,
              "segmentation failed after " + std::to_string(attempts) + " attempt(s); last failure: " +
                  last_failure);
}

// ------------------------------------------------------------ baselines

SegmentedTranscript rule_based_segment(std::string_view transcript) {
  const Lexicon& lex = builtin_lexicon();
  std::vector<std::string> descriptive;
  std::vector<std::string> expressive;
  for (auto& sentence : text::split_sentences(transcript)) {
    bool first_person = false;
    bool feeling = false;
    bool feeling_verb = false;
    int content_words = 0;
    for (const auto& w : text::words(sentence)) {
      const bool is_fp = lex.first_person.contains(w);
      const bool is_verb = lex.feeling_verbs.contains(w);
      const bool is_feel = lex.is_feeling_word(w);
      first_person |= is_fp;
      feeling_verb |= is_verb;
      feeling |= is_feel || is_verb;
      if (!is_fp && !is_verb && !is_feel && !lex.is_intensifier(w) && !lex.stopwords.contains(w)) {
        ++content_words;
      }
    }
    const bool is_expressive = (first_person && feeling) || feeling_verb;
    if (!is_expressive) {
      descriptive.push_back(sentence);
    } else {
      expressive.push_back(sentence);
      if (content_words >= 2) descriptive.push_back(sentence);
    }
  }
  SegmentedTranscript seg;
  seg.descriptive = text::join(descriptive, " ");
  seg.expressive = text::join(expressive, " ");
  seg.source = SegmentSource::rule_mock;
  seg.coverage = coverage_check(transcript, seg);
  return seg;
}

SegmentedTranscript random_segment(std::string_view transcript, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> descriptive;
  std::vector<std::string> expressive;
  for (auto& sentence : text::split_sentences(transcript)) {
    const double u = rng.uniform();
    if (u < 0.45) {
      descriptive.push_back(sentence);
    } else if (u < 0.90) {
      expressive.push_back(sentence);
    } else {
      descriptive.push_back(sentence);
      expressive.push_back(sentence);
    }
  }
  SegmentedTranscript seg;
  seg.descriptive = text::join(descriptive, " ");
  seg.expressive = text::join(expressive, " ");
  seg.source = SegmentSource::random;
  seg.coverage = coverage_check(transcript, seg);
  return seg;
}

double word_f1(std::string_view a, std::string_view b) {
  const auto wa = text::words(a);
  const auto wb = text::words(b);
  if (wa.empty() && wb.empty()) return 1.0;
  std::map<std::string, std::size_t> counts;
  for (const auto& w : wa) ++counts[w];
  std::size_t common = 0;
  for (const auto& w : wb) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(wa.size() + wb.size());
}

// ----------------------------------------------------------- cache rows

std::string transcript_hash(std::string_view transcript) {
  return text::hex64(text::fnv1a64(transcript));
}

std::string render_segment_row(const SegmentRow& row) {
  json j;
  j["participant_id"] = row.participant_id;
  j["clip_id"] = row.clip_id;
  j["descriptive"] = row.segments.descriptive;
  j["expressive"] = row.segments.expressive;
  j["coverage"] = row.segments.coverage ? json(*row.segments.coverage) : json(nullptr);
  j["source"] = std::string(to_string(row.segments.source));
  j["transcript_hash"] = row.transcript_hash;
  j["backend_id"] = row.backend_id;
  return j.dump();
}

SegmentRow parse_segment_row(std::string_view line, std::size_t line_number) {
  const std::string where = "segments line " + std::to_string(line_number);
  try {
    const auto j = json::parse(line);
    SegmentRow row;
    row.participant_id = j.at("participant_id").get<std::string>();
    row.clip_id = j.at("clip_id").get<std::string>();
    row.segments.descriptive = j.at("descriptive").get<std::string>();
    row.segments.expressive = j.at("expressive").get<std::string>();
    if (j.contains("coverage") && !j["coverage"].is_null()) {
      row.segments.coverage = j["coverage"].get<double>();
    }
    row.segments.source = segment_source_from_string(j.value("source", std::string("human")));
    row.transcript_hash = j.value("transcript_hash", std::string());
    row.backend_id = j.value("backend_id", std::string());
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, where + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::parse, where + ": " + e.what());
  }
}

std::vector<SegmentRow> load_segment_rows(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open segments file '" + path.string() + "'");
  std::vector<SegmentRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    rows.push_back(parse_segment_row(line, line_no));
  }
  return rows;
}

void write_segment_rows(const std::vector<SegmentRow>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write segments file '" + path.string() + "'");
  for (const auto& row : rows) out << render_segment_row(row) << '\n';
}

SegmentCache::SegmentCache(const std::vector<SegmentRow>& rows) {
  for (const auto& row : rows) {
    if (row.transcript_hash.empty() || row.backend_id.empty()) continue;
    entries_[{row.transcript_hash, row.backend_id}] = row.segments;
  }
}

const SegmentedTranscript* SegmentCache::find(std::string_view transcript,
                                              std::string_view backend_id) const {
  auto it = entries_.find({transcript_hash(transcript), std::string(backend_id)});
  return it == entries_.end() ? nullptr : &it->second;
}

void SegmentCache::insert(std::string_view transcript, std::string_view backend_id,
                          SegmentedTranscript seg) {
  entries_[{transcript_hash(transcript), std::string(backend_id)}] = std::move(seg);
}

}  // namespace emosem
