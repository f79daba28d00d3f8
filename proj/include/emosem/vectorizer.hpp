#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace emosem {

/// Sorted (index, value) pairs.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool empty() const { return entries.empty(); }
  double norm() const;
  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

/// Lowercase word unigrams followed by adjacent-word bigrams ("a b").
std::vector<std::string> unigrams_and_bigrams(std::string_view doc);

/// tf-idf over unigrams and bigrams with smoothed idf
/// ln((1 + N) / (1 + df)) + 1. Vocabulary is ordered by (-df, token).
class Vectorizer {
 public:
  Vectorizer() = default;

  /// min_df: minimum document frequency; max_features: 0 means unlimited.
  /// Throws ErrorCode::empty_corpus for an empty document list.
  static Vectorizer fit(std::span<const std::string> docs, std::size_t min_df = 1,
                        std::size_t max_features = 0);

  /// Raw-count tf times idf, L2-normalized; zero vector when nothing matches.
  SparseVector transform(std::string_view doc) const;
  std::vector<SparseVector> transform_all(std::span<const std::string> docs) const;

  std::size_t size() const { return vocabulary_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& idf() const { return idf_; }
  std::size_t min_df() const { return min_df_; }
  std::size_t max_features() const { return max_features_; }
  /// Order-sensitive hash of the documents the vocabulary was fitted on.
  std::uint64_t fit_fingerprint() const { return fingerprint_; }
  /// Index of a token, or -1.
  std::int64_t index_of(std::string_view token) const;

  /// Rebuilds a vectorizer from serialized parts.
  static Vectorizer from_parts(std::vector<std::string> vocabulary, std::vector<double> idf,
                               std::size_t min_df, std::size_t max_features,
                               std::uint64_t fingerprint);

 private:
  std::vector<std::string> vocabulary_;
  std::vector<double> idf_;
  std::vector<std::pair<std::string, std::uint32_t>> lookup_;  // sorted by token
  std::size_t min_df_ = 1;
  std::size_t max_features_ = 0;
  std::uint64_t fingerprint_ = 0;

  void build_lookup();
};

/// Order-sensitive hash of a document sequence; what Vectorizer::fit records.
std::uint64_t documents_fingerprint(std::span<const std::string> docs);

}  // namespace emosem
