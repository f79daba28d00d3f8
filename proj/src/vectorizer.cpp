#include "emosem/vectorizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "emosem/error.hpp"
#include "emosem/text.hpp"

namespace emosem {

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& [i, v] : entries) s += v * v;
  return std::sqrt(s);
}

std::vector<std::string> unigrams_and_bigrams(std::string_view doc) {
  auto out = text::words(doc);
  const std::size_t n = out.size();
  out.reserve(n + (n > 0 ? n - 1 : 0));
  for (std::size_t i = 0; i + 1 < n; ++i) out.push_back(out[i] + " " + out[i + 1]);
  return out;
}

std::uint64_t documents_fingerprint(std::span<const std::string> docs) {
  std::uint64_t h = text::kFnvOffsetBasis;
  for (const auto& d : docs) {
    h = text::fnv1a64(d, h);
    h = text::fnv1a64("\x1e", h);
  }
  return h;
}

Vectorizer Vectorizer::fit(std::span<const std::string> docs, std::size_t min_df,
                           std::size_t max_features) {
  if (docs.empty()) throw Error(ErrorCode::empty_corpus, "cannot fit a vectorizer on 0 documents");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& d : docs) {
    auto terms = unigrams_and_bigrams(d);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    for (auto& t : terms) ++df[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [t, n] : df) {
    if (n >= std::max<std::size_t>(min_df, 1)) kept.emplace_back(t, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (max_features > 0 && kept.size() > max_features) kept.resize(max_features);

  Vectorizer v;
  v.min_df_ = min_df;
  v.max_features_ = max_features;
  v.fingerprint_ = documents_fingerprint(docs);
  const double n_docs = static_cast<double>(docs.size());
  for (auto& [t, n] : kept) {
    v.vocabulary_.push_back(t);
    v.idf_.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(n))) + 1.0);
  }
  v.build_lookup();
  return v;
}

void Vectorizer::build_lookup() {
  lookup_.clear();
  lookup_.reserve(vocabulary_.size());
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    lookup_.emplace_back(vocabulary_[i], static_cast<std::uint32_t>(i));
  }
  std::sort(lookup_.begin(), lookup_.end());
}

std::int64_t Vectorizer::index_of(std::string_view token) const {
  auto it = std::lower_bound(lookup_.begin(), lookup_.end(), token,
                             [](const auto& e, std::string_view t) { return e.first < t; });
  if (it == lookup_.end() || it->first != token) return -1;
  return it->second;
}

SparseVector Vectorizer::transform(std::string_view doc) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : unigrams_and_bigrams(doc)) {
    const auto i = index_of(t);
    if (i >= 0) counts[static_cast<std::uint32_t>(i)] += 1.0;
  }
  SparseVector out;
  out.entries.reserve(counts.size());
  for (const auto& [i, c] : counts) out.entries.emplace_back(i, c * idf_[i]);
  const double n = out.norm();
  if (n > 0.0) {
    for (auto& e : out.entries) e.second /= n;
  }
  return out;
}

std::vector<SparseVector> Vectorizer::transform_all(std::span<const std::string> docs) const {
  std::vector<SparseVector> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(transform(d));
  return out;
}

Vectorizer Vectorizer::from_parts(std::vector<std::string> vocabulary, std::vector<double> idf,
                                  std::size_t min_df, std::size_t max_features,
                                  std::uint64_t fingerprint) {
  if (vocabulary.size() != idf.size()) {
    throw Error(ErrorCode::shape_mismatch, "vocabulary has " + std::to_string(vocabulary.size()) +
                                               " terms but idf has " + std::to_string(idf.size()));
  }
  std::set<std::string> seen(vocabulary.begin(), vocabulary.end());
  if (seen.size() != vocabulary.size()) {
    throw Error(ErrorCode::parse, "vocabulary contains duplicate terms");
  }
  Vectorizer v;
  v.vocabulary_ = std::move(vocabulary);
  v.idf_ = std::move(idf);
  v.min_df_ = min_df;
  v.max_features_ = max_features;
  v.fingerprint_ = fingerprint;
  v.build_lookup();
  return v;
}

}  // namespace emosem
