#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emosem {

/// The six basic emotion categories. Enumerator order is the canonical
/// ordering used by every vector encoding in the library.
enum class Emotion : std::uint8_t { sadness, fear, joy, disgust, surprise, anger };

inline constexpr std::size_t kNumEmotions = 6;

inline constexpr std::array<Emotion, kNumEmotions> kAllEmotions{
    Emotion::sadness, Emotion::fear,     Emotion::joy,
    Emotion::disgust, Emotion::surprise, Emotion::anger};

constexpr std::size_t index_of(Emotion e) { return static_cast<std::size_t>(e); }

constexpr Emotion emotion_at(std::size_t i) { return kAllEmotions.at(i); }

std::string_view to_string(Emotion e);

/// Case-insensitive lookup of a canonical emotion name.
std::optional<Emotion> parse_emotion(std::string_view name);

/// Like parse_emotion but throws ErrorCode::parse on unknown names.
Emotion emotion_from_string(std::string_view name);

/// Per-emotion 0..6 Likert ratings in canonical order.
using RatingVector = std::array<int, kNumEmotions>;

/// A subset of the six categories, stored as a bitmask.
class LabelSet {
 public:
  constexpr LabelSet() = default;
  constexpr explicit LabelSet(std::uint8_t bits) : bits_(bits & kMask) {}
  LabelSet(std::initializer_list<Emotion> members) {
    for (Emotion e : members) insert(e);
  }

  static constexpr LabelSet all() { return LabelSet(kMask); }

  constexpr bool contains(Emotion e) const { return (bits_ >> index_of(e)) & 1U; }
  constexpr void insert(Emotion e) {
    bits_ = static_cast<std::uint8_t>(bits_ | (1U << index_of(e)));
  }
  constexpr void erase(Emotion e) {
    bits_ = static_cast<std::uint8_t>(bits_ & ~(1U << index_of(e)));
  }
  constexpr bool empty() const { return bits_ == 0; }
  std::size_t size() const;
  constexpr std::uint8_t bits() const { return bits_; }

  constexpr LabelSet intersect(LabelSet o) const { return LabelSet(bits_ & o.bits_); }
  constexpr LabelSet unite(LabelSet o) const { return LabelSet(bits_ | o.bits_); }
  constexpr bool subset_of(LabelSet o) const { return (bits_ & ~o.bits_) == 0; }

  std::vector<Emotion> members() const;
  /// Canonical-order names joined by '|', or "{}" when empty.
  std::string to_string() const;

  friend constexpr bool operator==(LabelSet a, LabelSet b) = default;

 private:
  static constexpr std::uint8_t kMask = 0x3F;
  std::uint8_t bits_ = 0;
};

}  // namespace emosem
