#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "emosem/emotion.hpp"

namespace emosem {

/// The emotion lexicon shipped in data/lexicon.txt.
struct Lexicon {
  std::set<std::string, std::less<>> first_person;
  std::set<std::string, std::less<>> feeling_verbs;
  std::array<std::vector<std::string>, kNumEmotions> feeling;
  std::vector<std::string> intensifier_low;
  std::vector<std::string> intensifier_mid;
  std::vector<std::string> intensifier_high;
  std::set<std::string, std::less<>> stopwords;

  /// Which emotion a feeling word belongs to, if any.
  std::optional<Emotion> feeling_emotion(std::string_view word) const;
  bool is_feeling_word(std::string_view word) const;
  bool is_intensifier(std::string_view word) const;

  /// Parses the section format of data/lexicon.txt.
  static Lexicon parse(std::string_view text);
};

/// The lexicon compiled into the library.
const Lexicon& builtin_lexicon();

/// Raw text of the compiled-in lexicon file.
std::string_view builtin_lexicon_text();

}  // namespace emosem
