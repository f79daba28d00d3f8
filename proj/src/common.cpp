#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>

#include "emosem/emotion.hpp"
#include "emosem/error.hpp"
#include "emosem/text.hpp"

namespace emosem {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return "parse";
    case ErrorCode::invariant: return "invariant";
    case ErrorCode::reference: return "reference";
    case ErrorCode::io: return "io";
    case ErrorCode::config: return "config";
    case ErrorCode::too_few_participants: return "too_few_participants";
    case ErrorCode::not_synthetic: return "not_synthetic";
    case ErrorCode::transport: return "transport";
    case ErrorCode::authentication: return "authentication";
    case ErrorCode::unresolvable_locator: return "unresolvable_locator";
    case ErrorCode::empty_completion: return "empty_completion";
    case ErrorCode::empty_reference: return "empty_reference";
    case ErrorCode::empty_transcript: return "empty_transcript";
    case ErrorCode::missing_answer_block: return "missing_answer_block";
    case ErrorCode::missing_role_tag: return "missing_role_tag";
    case ErrorCode::empty_segments: return "empty_segments";
    case ErrorCode::segmentation_failed: return "segmentation_failed";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::degenerate_data: return "degenerate_data";
    case ErrorCode::empty_corpus: return "empty_corpus";
    case ErrorCode::missing_class: return "missing_class";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::too_few_differences: return "too_few_differences";
    case ErrorCode::length_mismatch: return "length_mismatch";
  }
  return "unknown";
}

// ------------------------------------------------------------- emotions

namespace {
constexpr std::array<std::string_view, kNumEmotions> kEmotionNames{
    "sadness", "fear", "joy", "disgust", "surprise", "anger"};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}
}  // namespace

std::string_view to_string(Emotion e) { return kEmotionNames[index_of(e)]; }

std::optional<Emotion> parse_emotion(std::string_view name) {
  name = text::trim(name);
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    if (iequals(name, kEmotionNames[i])) return kAllEmotions[i];
  }
  return std::nullopt;
}

Emotion emotion_from_string(std::string_view name) {
  if (auto e = parse_emotion(name)) return *e;
  throw Error(ErrorCode::parse, "unknown emotion '" + std::string(name) + "'");
}

std::size_t LabelSet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<Emotion> LabelSet::members() const {
  std::vector<Emotion> out;
  for (Emotion e : kAllEmotions) {
    if (contains(e)) out.push_back(e);
  }
  return out;
}

std::string LabelSet::to_string() const {
  if (empty()) return "{}";
  std::string out;
  for (Emotion e : members()) {
    if (!out.empty()) out += '|';
    out += emosem::to_string(e);
  }
  return out;
}

// ----------------------------------------------------------------- text

namespace text {

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (c == '\'') continue;
    const bool word_char = u >= 0x80 || std::isalnum(u);
    if (!word_char) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += static_cast<char>(u < 0x80 ? std::tolower(u) : u);
  }
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  const std::string norm = normalize(s);
  std::size_t start = 0;
  while (start < norm.size()) {
    std::size_t end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    out.emplace_back(norm.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  const auto flush = [&](std::size_t end) {
    std::string_view piece = trim(s.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end;
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '.' || s[i] == '?' || s[i] == '!') {
      // Keep runs like "?!" or "..." with the sentence they end.
      while (i + 1 < s.size() && (s[i + 1] == '.' || s[i + 1] == '?' || s[i + 1] == '!')) ++i;
      flush(i + 1);
    }
  }
  flush(s.size());
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace text
}  // namespace emosem
