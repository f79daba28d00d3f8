#include "emosem/lexicon.hpp"

#include <algorithm>
#include <sstream>

#include "emosem/error.hpp"
#include "emosem/lexicon_data.hpp"
#include "emosem/text.hpp"

namespace emosem {

std::optional<Emotion> Lexicon::feeling_emotion(std::string_view word) const {
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    const auto& words = feeling[i];
    if (std::find(words.begin(), words.end(), word) != words.end()) return emotion_at(i);
  }
  return std::nullopt;
}

bool Lexicon::is_feeling_word(std::string_view word) const {
  return feeling_emotion(word).has_value();
}

bool Lexicon::is_intensifier(std::string_view word) const {
  for (const auto* group : {&intensifier_low, &intensifier_mid, &intensifier_high}) {
    if (std::find(group->begin(), group->end(), word) != group->end()) return true;
  }
  return false;
}

Lexicon Lexicon::parse(std::string_view text) {
  Lexicon lex;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = text::trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (view.front() == '[') {
      if (view.back() != ']') {
        throw Error(ErrorCode::parse, "lexicon line " + std::to_string(line_no) +
                                          ": unterminated section header");
      }
      section = std::string(view.substr(1, view.size() - 2));
      continue;
    }
    std::istringstream words{std::string(view)};
    std::string w;
    while (words >> w) {
      if (section == "first_person") {
        lex.first_person.insert(w);
      } else if (section == "feeling_verbs") {
        lex.feeling_verbs.insert(w);
      } else if (section.starts_with("feeling.")) {
        lex.feeling[index_of(emotion_from_string(section.substr(8)))].push_back(w);
      } else if (section == "intensifier.low") {
        lex.intensifier_low.push_back(w);
      } else if (section == "intensifier.mid") {
        lex.intensifier_mid.push_back(w);
      } else if (section == "intensifier.high") {
        lex.intensifier_high.push_back(w);
      } else if (section == "stopwords") {
        lex.stopwords.insert(w);
      } else {
        throw Error(ErrorCode::parse, "lexicon line " + std::to_string(line_no) +
                                          ": unknown section '" + section + "'");
      }
    }
  }
  return lex;
}

std::string_view builtin_lexicon_text() { return detail::kLexiconText; }

const Lexicon& builtin_lexicon() {
  static const Lexicon lex = Lexicon::parse(detail::kLexiconText);
  return lex;
}

}  // namespace emosem
