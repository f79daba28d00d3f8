#include "emosem/synth.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "emosem/error.hpp"
#include "emosem/lexicon.hpp"
#include "emosem/rng.hpp"
#include "emosem/text.hpp"

namespace emosem {

namespace {

struct ScenePool {
  std::string_view clip_id;
  std::string_view title;
  Emotion intended;
  double duration_seconds;
  std::string_view source_note;
  std::vector<std::string_view> nouns;
  std::vector<std::string_view> verbs;
};

// Two clips per emotion, scene vocabulary taken from the clip descriptions.
const std::vector<ScenePool>& scene_pools() {
  static const std::vector<ScenePool> pools = {
      {"blair_witch", "The Blair Witch Project", Emotion::fear, 123, "Schaefer et al. (2010)",
       {"camera", "wall", "basement", "woods", "flashlight", "scream", "cellar"},
       {"falls", "faces", "shakes", "drops"}},
      {"conjuring", "The Conjuring", Emotion::fear, 146, "Iyilikci et al. (2024)",
       {"bed", "cupboard", "night", "hallway", "door", "wardrobe", "sleepwalker"},
       {"bangs", "wakes", "creaks", "slams"}},
      {"american_history_x", "American History X", Emotion::anger, 204,
       "Schaefer et al. (2010)",
       {"skinhead", "curb", "man", "police", "street", "tattoo", "driveway"},
       {"smashes", "kicks", "smiles", "stomps"}},
      {"platoon", "Platoon", Emotion::anger, 162, "Author tested in pilot.",
       {"villagers", "village", "soldier", "child", "fire", "rifle", "hut"},
       {"pushes", "burns", "stops", "shoves"}},
      {"baby_laughing", "Baby laughing at ripping paper", Emotion::joy, 104,
       "Author tested in pilot.",
       {"baby", "daddy", "paper", "letter", "couch", "giggle", "rejection"},
       {"laughs", "rips", "tears", "giggles"}},
      {"cats_and_dog", "Cats and Dog playing together", Emotion::joy, 113,
       "Author tested in pilot.",
       {"dog", "kittens", "cat", "blanket", "music", "pillow", "puppy"},
       {"plays", "naps", "cuddles", "purrs"}},
      {"one_day", "One Day", Emotion::surprise, 146, "Zupan and Eskinazi (2020)",
       {"woman", "bicycle", "truck", "road", "helmet", "traffic", "intersection"},
       {"rides", "crashes", "strikes", "pedals"}},
      {"neighbors", "Neighbors", Emotion::surprise, 67, "Author tested in pilot.",
       {"airbags", "office", "ceiling", "phone", "desk", "guy", "recall"},
       {"ejects", "launches", "calls", "flies"}},
      {"trainspotting", "Trainspotting", Emotion::disgust, 83, "Schaefer et al. (2010)",
       {"toilet", "bowl", "bathroom", "sewage", "stall", "drain", "suppository"},
       {"dives", "crawls", "reaches", "floats"}},
      {"planet_terror", "Planet Terror", Emotion::disgust, 121, "Michelini et al. (2019)",
       {"doctors", "hospital", "patient", "wound", "pus", "boils", "gurney"},
       {"examines", "oozes", "exposes", "bleeds"}},
      {"young_impala", "Young impala and dead mother", Emotion::sadness, 104,
       "Author tested in pilot.",
       {"impala", "mother", "savanna", "calf", "grass", "carcass", "herd"},
       {"nudges", "rests", "waits", "nuzzles"}},
      {"my_girl", "My Girl", Emotion::sadness, 99, "Gabert-Quillen et al. (2015)",
       {"funeral", "casket", "daughter", "boy", "church", "coffin", "flowers"},
       {"cries", "runs", "approaches", "weeps"}},
  };
  return pools;
}

// {0} first noun, {1} verb, {2} second noun.
constexpr std::array<std::string_view, 4> kDescriptiveTemplates = {
    "The {0} {1} the {2}.",
    "There is a {0} near the {2}.",
    "Then the {0} {1} a {2}.",
    "In the scene the {0} {1} the {2}.",
};

// {0} intensifier, {1} feeling word.
constexpr std::array<std::string_view, 3> kExpressiveTemplates = {
    "I felt {0} {1}.",
    "It made me feel {0} {1}.",
    "Honestly I was {0} {1}.",
};

std::string fill(std::string_view tmpl, std::span<const std::string_view> args) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{' && i + 2 < tmpl.size() && tmpl[i + 2] == '}') {
      out += args[static_cast<std::size_t>(tmpl[i + 1] - '0')];
      i += 2;
    } else {
      out += tmpl[i];
    }
  }
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

// Template words with placeholders removed.
std::set<std::string> template_words(std::span<const std::string_view> templates) {
  std::set<std::string> out;
  for (auto t : templates) {
    std::string stripped;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] == '{') {
        i += 2;
        stripped += ' ';
      } else {
        stripped += t[i];
      }
    }
    for (auto& w : text::words(stripped)) out.insert(w);
  }
  return out;
}

const ScenePool& pool_for(const ClipSpec& clip) {
  const auto& pools = scene_pools();
  for (const auto& p : pools) {
    if (p.clip_id == clip.clip_id) return p;
  }
  // Extra clips: reuse the first pool of the same emotion.
  for (const auto& p : pools) {
    if (p.intended == clip.intended) return p;
  }
  return pools.front();
}

// Rating bands: 0 for 1-2, 1 for 3-4, 2 for 5-6. The band picks both the
// intensifier list and which of the first three lexicon words names the
// emotion, so small training splits still see every word.
std::size_t intensity_band(int rating) {
  if (rating <= 2) return 0;
  if (rating <= 4) return 1;
  return 2;
}

const std::vector<std::string>& intensifiers_for(std::size_t band, const Lexicon& lex) {
  if (band == 0) return lex.intensifier_low;
  if (band == 1) return lex.intensifier_mid;
  return lex.intensifier_high;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

std::string participant_id(int i, int n) {
  const int width = std::max(3, static_cast<int>(std::to_string(n).size()));
  std::string digits = std::to_string(i);
  return "P" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0') +
         digits;
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

void validate(const SynthConfig& c) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::invariant, "SynthConfig." + field + " " + why);
  };
  if (c.n_participants < 1) fail("n_participants", "must be >= 1");
  if (c.clips_per_emotion < 1) fail("clips_per_emotion", "must be >= 1");
  auto unit = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) fail(name, "must be in [0,1]");
  };
  unit(c.descriptive_signal, "descriptive_signal");
  unit(c.expressive_signal, "expressive_signal");
  unit(c.evoked_noise, "evoked_noise");
  if (c.min_descriptive_sentences < 1) fail("min_descriptive_sentences", "must be >= 1");
  if (c.max_descriptive_sentences < c.min_descriptive_sentences) {
    fail("max_descriptive_sentences", "must be >= min_descriptive_sentences");
  }
  if (c.max_expressive_sentences < 0) fail("max_expressive_sentences", "must be >= 0");
}

std::string config_hash(const SynthConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "n_participants=" << c.n_participants << ";clips_per_emotion=" << c.clips_per_emotion
     << ";descriptive_signal=" << c.descriptive_signal
     << ";expressive_signal=" << c.expressive_signal << ";evoked_noise=" << c.evoked_noise
     << ";seed=" << c.seed << ";descriptive_sentences=" << c.min_descriptive_sentences << ".."
     << c.max_descriptive_sentences << ";max_expressive_sentences="
     << c.max_expressive_sentences;
  return text::hex64(text::fnv1a64(os.str()));
}

double valence_weight(Emotion e) {
  switch (e) {
    case Emotion::joy: return 1.0;
    case Emotion::surprise: return 0.0;
    default: return -1.0;
  }
}

double valence_from_ratings(const RatingVector& evoked) {
  double weighted = 0.0;
  double total = 0.0;
  for (Emotion e : kAllEmotions) {
    const double r = evoked[index_of(e)];
    weighted += valence_weight(e) * r;
    total += r;
  }
  return 0.5 + 0.5 * weighted / std::max(6.0, total);
}

double arousal_from_ratings(const RatingVector& evoked) {
  return *std::max_element(evoked.begin(), evoked.end()) / 6.0;
}

std::vector<ClipSpec> synthetic_clips(int clips_per_emotion) {
  std::vector<ClipSpec> out;
  const auto& pools = scene_pools();
  for (Emotion e : kAllEmotions) {
    int k = 0;
    for (const auto& p : pools) {
      if (p.intended != e || k >= clips_per_emotion) continue;
      out.push_back({std::string(p.clip_id), std::string(p.title), e, p.duration_seconds,
                     std::string(p.source_note)});
      ++k;
    }
    for (; k < clips_per_emotion; ++k) {
      const std::string name(to_string(e));
      out.push_back({name + "_" + std::to_string(k + 1), "Synthetic " + name + " clip " +
                         std::to_string(k + 1),
                     e, 120.0, "synthetic"});
    }
  }
  return out;
}

bool template_vocabularies_disjoint() {
  const Lexicon& lex = builtin_lexicon();
  std::set<std::string> descriptive = template_words(kDescriptiveTemplates);
  for (const auto& p : scene_pools()) {
    for (auto w : p.nouns) descriptive.insert(std::string(w));
    for (auto w : p.verbs) descriptive.insert(std::string(w));
  }
  std::set<std::string> expressive = template_words(kExpressiveTemplates);
  for (const auto& words : lex.feeling) expressive.insert(words.begin(), words.end());
  for (const auto* v : {&lex.intensifier_low, &lex.intensifier_mid, &lex.intensifier_high}) {
    expressive.insert(v->begin(), v->end());
  }
  for (const auto& w : descriptive) {
    if (expressive.contains(w) || lex.first_person.contains(w) ||
        lex.feeling_verbs.contains(w)) {
      return false;
    }
  }
  return true;
}

Corpus synthesize_corpus(const SynthConfig& config) {
  validate(config);
  const Lexicon& lex = builtin_lexicon();
  Rng rng(config.seed);

  Corpus corpus;
  corpus.clips = synthetic_clips(config.clips_per_emotion);
  corpus.provenance = "synthetic:" + config_hash(config);

  std::array<std::vector<const ClipSpec*>, kNumEmotions> by_emotion;
  for (const auto& c : corpus.clips) by_emotion[index_of(c.intended)].push_back(&c);

  for (int p = 1; p <= config.n_participants; ++p) {
    const std::string pid = participant_id(p, config.n_participants);
    std::vector<const ClipSpec*> watched;
    for (Emotion e : kAllEmotions) watched.push_back(pick(rng, by_emotion[index_of(e)]));
    rng.shuffle(std::span(watched));

    for (const ClipSpec* clip : watched) {
      ResponseRecord r;
      r.participant_id = pid;
      r.clip_id = clip->clip_id;
      r.intended = clip->intended;

      // Evoked ratings: a spike on the intended emotion plus optional extras.
      r.evoked[index_of(clip->intended)] = rng.between(3, 6);
      if (rng.bernoulli(config.evoked_noise)) {
        std::vector<Emotion> others;
        for (Emotion e : kAllEmotions) {
          if (e != clip->intended) others.push_back(e);
        }
        rng.shuffle(std::span(others));
        const int extra = rng.between(1, 2);
        for (int k = 0; k < extra; ++k) r.evoked[index_of(others[k])] = rng.between(1, 5);
      }
      r.valence = round4(std::clamp(
          valence_from_ratings(r.evoked) + (2.0 * rng.uniform() - 1.0) * kVaNoiseHalfWidth, 0.0,
          1.0));
      r.arousal = round4(std::clamp(
          arousal_from_ratings(r.evoked) + (2.0 * rng.uniform() - 1.0) * kVaNoiseHalfWidth, 0.0,
          1.0));

      // (sentence, is_expressive)
      std::vector<std::pair<std::string, bool>> sentences;
      const int n_desc =
          rng.between(config.min_descriptive_sentences, config.max_descriptive_sentences);
      for (int k = 0; k < n_desc; ++k) {
        const ScenePool* pool = &pool_for(*clip);
        if (!rng.bernoulli(config.descriptive_signal)) {
          std::vector<const ClipSpec*> foreign;
          for (const auto& c : corpus.clips) {
            if (c.intended != clip->intended) foreign.push_back(&c);
          }
          pool = &pool_for(*pick(rng, foreign));
        }
        const auto tmpl = kDescriptiveTemplates[rng.below(kDescriptiveTemplates.size())];
        const std::string_view n1 = pick(rng, pool->nouns);
        const std::string_view v = pick(rng, pool->verbs);
        std::string_view n2 = pick(rng, pool->nouns);
        while (n2 == n1) n2 = pick(rng, pool->nouns);
        const std::array<std::string_view, 3> args{n1, v, n2};
        sentences.emplace_back(fill(tmpl, args), false);
      }

      std::vector<Emotion> felt;
      for (Emotion e : kAllEmotions) {
        if (r.rating(e) > 0) felt.push_back(e);
      }
      std::stable_sort(felt.begin(), felt.end(),
                       [&](Emotion a, Emotion b) { return r.rating(a) > r.rating(b); });
      const std::size_t n_expr =
          std::min(felt.size(), static_cast<std::size_t>(config.max_expressive_sentences));
      for (std::size_t k = 0; k < n_expr; ++k) {
        Emotion named = felt[k];
        std::size_t band = intensity_band(r.rating(named));
        if (!rng.bernoulli(config.expressive_signal)) {
          named = emotion_at(rng.below(kNumEmotions));
          band = intensity_band(rng.between(1, 6));
        }
        const auto tmpl = kExpressiveTemplates[rng.below(kExpressiveTemplates.size())];
        const auto& pool = lex.feeling[index_of(named)];
        const std::string& word = pool[std::min(band, pool.size() - 1)];
        const std::string& inten = pick(rng, intensifiers_for(band, lex));
        const std::array<std::string_view, 2> args{inten, word};
        sentences.emplace_back(fill(tmpl, args), true);
      }

      rng.shuffle(std::span(sentences));
      GoldPartition gold;
      std::vector<std::string> parts;
      for (auto& [s, expressive] : sentences) {
        parts.push_back(s);
        (expressive ? gold.expressive : gold.descriptive).push_back(s);
      }
      r.transcript = text::join(parts, " ");
      corpus.gold.emplace(r.key(), std::move(gold));
      corpus.records.push_back(std::move(r));
    }
  }
  return corpus;
}

SegmentedTranscript gold_segments(const Corpus& corpus, const ResponseRecord& record) {
  const auto it = corpus.gold.find(record.key());
  if (!corpus.is_synthetic() || it == corpus.gold.end()) {
    throw Error(ErrorCode::not_synthetic,
                "record " + record.key() + " has no generator bookkeeping (corpus provenance '" +
                    corpus.provenance + "')");
  }
  SegmentedTranscript seg;
  seg.descriptive = text::join(it->second.descriptive, " ");
  seg.expressive = text::join(it->second.expressive, " ");
  seg.source = SegmentSource::gold;
  if (record.transcript) seg.coverage = coverage_check(*record.transcript, seg);
  return seg;
}

}  // namespace emosem
