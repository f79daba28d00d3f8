#include "emosem/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emosem/error.hpp"
#include "emosem/rng.hpp"
#include "emosem/text.hpp"

namespace emosem {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void invariant_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::invariant, where + ": " + what);
}

std::string record_label(const ResponseRecord& r) {
  return "record " + r.participant_id + "/" + r.clip_id;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated.
std::vector<std::vector<std::string>> parse_csv_rows(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (!row.empty() || !field.empty() || field_started) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      field_started = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorCode::parse, "clips CSV: unterminated quoted field");
  if (!row.empty() || !field.empty() || field_started) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_number(double v) {
  // Same shortest round-trip form the JSON writer uses.
  return json(v).dump();
}

}  // namespace

// ----------------------------------------------------------- validation

const ClipSpec* Corpus::find_clip(std::string_view clip_id) const {
  for (const auto& c : clips) {
    if (c.clip_id == clip_id) return &c;
  }
  return nullptr;
}

std::vector<std::string> Corpus::participants() const {
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.participant_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

void validate(const ClipSpec& clip) {
  const std::string where = "clip '" + clip.clip_id + "'";
  if (clip.clip_id.empty()) invariant_error("clip", "field clip_id is empty");
  if (!std::isfinite(clip.duration_seconds) || clip.duration_seconds <= 0.0) {
    invariant_error(where, "field duration_seconds must be > 0");
  }
}

void validate(const ResponseRecord& r) {
  const std::string where = record_label(r);
  if (r.participant_id.empty()) invariant_error(where, "field participant_id is empty");
  if (r.clip_id.empty()) invariant_error(where, "field clip_id is empty");
  for (Emotion e : kAllEmotions) {
    const int v = r.rating(e);
    if (v < 0 || v > 6) {
      invariant_error(where, "field evoked." + std::string(to_string(e)) + " = " +
                                 std::to_string(v) + " is outside [0,6]");
    }
  }
  const auto unit = [&](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      invariant_error(where, std::string("field ") + name + " = " + format_number(v) +
                                 " is outside [0,1]");
    }
  };
  unit(r.valence, "valence");
  unit(r.arousal, "arousal");
  const bool has_transcript = r.transcript && !text::trim(*r.transcript).empty();
  const bool has_audio = r.audio_ref && !r.audio_ref->empty();
  if (!has_transcript && !has_audio) {
    invariant_error(where, "fields transcript and audio_ref are both absent");
  }
}

void validate(const Corpus& corpus) {
  std::set<std::string> clip_ids;
  for (const auto& c : corpus.clips) {
    validate(c);
    if (!clip_ids.insert(c.clip_id).second) {
      invariant_error("clip '" + c.clip_id + "'", "duplicate clip_id");
    }
  }
  std::set<std::string> keys;
  for (const auto& r : corpus.records) {
    validate(r);
    const ClipSpec* clip = corpus.find_clip(r.clip_id);
    if (!clip) {
      throw Error(ErrorCode::reference,
                  record_label(r) + ": clip_id '" + r.clip_id + "' does not resolve to a clip");
    }
    if (clip->intended != r.intended) {
      invariant_error(record_label(r), "field intended = " + std::string(to_string(r.intended)) +
                                           " differs from the clip's intended emotion " +
                                           std::string(to_string(clip->intended)));
    }
    if (!keys.insert(r.key()).second) {
      invariant_error(record_label(r), "duplicate (participant_id, clip_id) pair");
    }
  }
  for (const auto& [key, gold] : corpus.gold) {
    if (!keys.contains(key)) {
      throw Error(ErrorCode::reference, "gold partition for unknown record '" + key + "'");
    }
  }
}

// ------------------------------------------------------------ records IO

ResponseRecord parse_record_line(std::string_view line, std::size_t line_number) {
  const std::string where = "line " + std::to_string(line_number);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, where + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::parse, where + ": record is not a JSON object");

  const auto field_error = [&](const std::string& field, const std::string& what) {
    return Error(ErrorCode::parse, where + ": field " + field + " " + what);
  };
  const auto req_string = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) throw field_error(key, "must be a string");
    return j[key].get<std::string>();
  };
  const auto opt_string = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw field_error(key, "must be a string or null");
    return j[key].get<std::string>();
  };
  const auto req_number = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw field_error(key, "must be a number");
    return j[key].get<double>();
  };

  ResponseRecord r;
  r.participant_id = req_string("participant_id");
  r.clip_id = req_string("clip_id");
  r.transcript = opt_string("transcript");
  r.audio_ref = opt_string("audio_ref");
  const std::string intended = req_string("intended");
  if (auto e = parse_emotion(intended)) {
    r.intended = *e;
  } else {
    throw field_error("intended", "has unknown emotion '" + intended + "'");
  }
  if (!j.contains("evoked") || !j["evoked"].is_object()) {
    throw field_error("evoked", "must be an object");
  }
  const auto& ev = j["evoked"];
  if (ev.size() != kNumEmotions) {
    throw field_error("evoked", "must have exactly 6 keys");
  }
  for (Emotion e : kAllEmotions) {
    const std::string name(to_string(e));
    if (!ev.contains(name)) throw field_error("evoked." + name, "is missing");
    const auto& v = ev[name];
    if (!v.is_number_integer()) throw field_error("evoked." + name, "must be an integer");
    const auto rating = v.get<long long>();
    if (rating < -1000 || rating > 1000) {
      throw field_error("evoked." + name, "= " + std::to_string(rating) + " is outside [0,6]");
    }
    // Range [0,6] is checked by validate() so the error names the record.
    r.evoked[index_of(e)] = static_cast<int>(rating);
  }
  r.valence = req_number("valence");
  r.arousal = req_number("arousal");
  return r;
}

std::string render_record_line(const ResponseRecord& r) {
  json j;
  j["participant_id"] = r.participant_id;
  j["clip_id"] = r.clip_id;
  j["transcript"] = r.transcript ? json(*r.transcript) : json(nullptr);
  j["audio_ref"] = r.audio_ref ? json(*r.audio_ref) : json(nullptr);
  j["intended"] = std::string(to_string(r.intended));
  json ev = json::object();
  for (Emotion e : kAllEmotions) ev[std::string(to_string(e))] = r.rating(e);
  j["evoked"] = ev;
  j["valence"] = r.valence;
  j["arousal"] = r.arousal;
  return j.dump();
}

// -------------------------------------------------------------- clips IO

std::vector<ClipSpec> parse_clips_csv(std::string_view text) {
  const auto rows = parse_csv_rows(text);
  static const std::vector<std::string> kHeader{"clip_id", "title", "intended",
                                                "duration_seconds", "source_note"};
  if (rows.empty() || rows.front() != kHeader) {
    throw Error(ErrorCode::parse,
                "clips CSV line 1: header must be clip_id,title,intended,duration_seconds,source_note");
  }
  std::vector<ClipSpec> clips;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::string where = "clips CSV line " + std::to_string(i + 1);
    const auto& row = rows[i];
    if (row.size() != kHeader.size()) {
      throw Error(ErrorCode::parse, where + ": expected 5 columns, got " + std::to_string(row.size()));
    }
    ClipSpec c;
    c.clip_id = row[0];
    c.title = row[1];
    if (auto e = parse_emotion(row[2])) {
      c.intended = *e;
    } else {
      throw Error(ErrorCode::parse, where + ": unknown emotion '" + row[2] + "'");
    }
    try {
      std::size_t used = 0;
      c.duration_seconds = std::stod(row[3], &used);
      if (used != row[3].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorCode::parse, where + ": duration_seconds '" + row[3] + "' is not a number");
    }
    c.source_note = row[4];
    clips.push_back(std::move(c));
  }
  return clips;
}

std::string render_clips_csv(const std::vector<ClipSpec>& clips) {
  std::string out = "clip_id,title,intended,duration_seconds,source_note\n";
  for (const auto& c : clips) {
    out += csv_field(c.clip_id) + ',' + csv_field(c.title) + ',' +
           std::string(to_string(c.intended)) + ',' + format_number(c.duration_seconds) + ',' +
           csv_field(c.source_note) + '\n';
  }
  return out;
}

// ------------------------------------------------------------ corpus IO

CorpusPaths CorpusPaths::for_records(const std::filesystem::path& records) {
  CorpusPaths p;
  p.records = records;
  auto stem = records;
  stem.replace_extension();
  const std::string base = stem.string();
  p.clips = base + ".clips.csv";
  p.gold = base + ".gold.jsonl";
  p.provenance = base + ".provenance.json";
  return p;
}

Corpus load_corpus(const std::filesystem::path& records_path) {
  return load_corpus(CorpusPaths::for_records(records_path));
}

Corpus load_corpus(const CorpusPaths& paths) {
  Corpus corpus;
  if (!std::filesystem::exists(paths.records)) {
    throw Error(ErrorCode::io, "corpus file '" + paths.records.string() + "' does not exist");
  }
  if (!std::filesystem::exists(paths.clips)) {
    throw Error(ErrorCode::io, "clips file '" + paths.clips.string() + "' does not exist");
  }
  corpus.clips = parse_clips_csv(read_text_file(paths.clips));

  {
    std::istringstream in(read_text_file(paths.records));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      corpus.records.push_back(parse_record_line(line, line_no));
    }
  }

  if (std::filesystem::exists(paths.provenance)) {
    try {
      const auto j = json::parse(read_text_file(paths.provenance));
      corpus.provenance = j.at("provenance").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse, paths.provenance.string() + ": " + e.what());
    }
  }
  if (std::filesystem::exists(paths.gold)) {
    std::istringstream in(read_text_file(paths.gold));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      try {
        const auto j = json::parse(line);
        GoldPartition g;
        g.descriptive = j.at("descriptive_sentences").get<std::vector<std::string>>();
        g.expressive = j.at("expressive_sentences").get<std::vector<std::string>>();
        corpus.gold[j.at("participant_id").get<std::string>() + "/" +
                    j.at("clip_id").get<std::string>()] = std::move(g);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, paths.gold.string() + " line " + std::to_string(line_no) +
                                          ": " + e.what());
      }
    }
  }
  validate(corpus);
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& records_path) {
  const auto paths = CorpusPaths::for_records(records_path);
  std::string records;
  for (const auto& r : corpus.records) records += render_record_line(r) + '\n';
  write_text_file(paths.records, records);
  write_text_file(paths.clips, render_clips_csv(corpus.clips));

  if (corpus.provenance != "real") {
    json j;
    j["provenance"] = corpus.provenance;
    write_text_file(paths.provenance, j.dump(2) + '\n');
  } else if (std::filesystem::exists(paths.provenance)) {
    std::filesystem::remove(paths.provenance);
  }
  if (!corpus.gold.empty()) {
    std::string gold;
    for (const auto& r : corpus.records) {
      auto it = corpus.gold.find(r.key());
      if (it == corpus.gold.end()) continue;
      json j;
      j["participant_id"] = r.participant_id;
      j["clip_id"] = r.clip_id;
      j["descriptive_sentences"] = it->second.descriptive;
      j["expressive_sentences"] = it->second.expressive;
      gold += j.dump() + '\n';
    }
    write_text_file(paths.gold, gold);
  } else if (std::filesystem::exists(paths.gold)) {
    std::filesystem::remove(paths.gold);
  }
}

// ---------------------------------------------------------------- split

SplitAssignment::Part SplitAssignment::part_of(const std::string& participant_id) const {
  if (train.contains(participant_id)) return Part::train;
  if (validation.contains(participant_id)) return Part::validation;
  if (test.contains(participant_id)) return Part::test;
  throw Error(ErrorCode::reference, "participant '" + participant_id + "' is in no split");
}

SplitAssignment split_participants(std::vector<std::string> participants, std::uint64_t seed) {
  std::sort(participants.begin(), participants.end());
  participants.erase(std::unique(participants.begin(), participants.end()), participants.end());
  const std::size_t n = participants.size();
  if (n < 3) {
    throw Error(ErrorCode::too_few_participants,
                "participant-level split needs at least 3 participants, got " + std::to_string(n));
  }
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(participants));

  const std::size_t base = n / 3;
  const std::size_t rem = n % 3;
  const std::size_t n_train = base + (rem >= 1 ? 1 : 0);
  const std::size_t n_val = base + (rem >= 2 ? 1 : 0);

  SplitAssignment split;
  split.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    auto& part = i < n_train ? split.train : i < n_train + n_val ? split.validation : split.test;
    part.insert(participants[i]);
  }
  return split;
}

SplitAssignment split_by_participant(const Corpus& corpus, std::uint64_t seed) {
  return split_participants(corpus.participants(), seed);
}

LabelSet binarize_evoked(const RatingVector& evoked, int threshold) {
  LabelSet out;
  for (Emotion e : kAllEmotions) {
    if (evoked[index_of(e)] >= threshold) out.insert(e);
  }
  return out;
}

}  // namespace emosem
