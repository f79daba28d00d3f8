#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Text normalization, tokenization and hashing shared by every module.
namespace emosem::text {

/// Lowercase ASCII, delete apostrophes, turn every other punctuation
/// character into a space, collapse whitespace runs, trim. Bytes >= 0x80
/// pass through untouched so UTF-8 words survive.
std::string normalize(std::string_view s);

/// Words of normalize(s).
std::vector<std::string> words(std::string_view s);

/// Splits on sentence terminators [.?!], keeping the terminator with its
/// sentence. Trailing text without a terminator forms a final sentence.
/// Empty or whitespace-only pieces are dropped.
std::vector<std::string> split_sentences(std::string_view s);

std::string_view trim(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a. The basis parameter doubles as a hash seed.
constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t basis = kFnvOffsetBasis) {
  std::uint64_t h = basis;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

/// Fixed-width lowercase hex.
std::string hex64(std::uint64_t v);

}  // namespace emosem::text
