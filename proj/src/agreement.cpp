#include "emosem/agreement.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "emosem/backends.hpp"
#include "emosem/error.hpp"

namespace emosem {

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::dimension_mismatch, "cosine_similarity: dimensions " +
                                                   std::to_string(u.size()) + " and " +
                                                   std::to_string(v.size()) + " differ");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(c, -1.0, 1.0);
}

namespace {

bool is_zero(const std::vector<double>& v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

double role_cosine(const std::string& a, const std::string& b, const Embedder& embedder) {
  const auto ea = embedder.embed(a);
  const auto eb = embedder.embed(b);
  const bool za = is_zero(ea);
  const bool zb = is_zero(eb);
  if (za && zb) return 1.0;
  if (za || zb) return 0.0;
  return cosine_similarity(ea, eb);
}

}  // namespace

RoleAgreement segmentation_agreement(const SegmentedTranscript& a, const SegmentedTranscript& b,
                                     const Embedder& embedder) {
  return {role_cosine(a.descriptive, b.descriptive, embedder),
          role_cosine(a.expressive, b.expressive, embedder)};
}

AgreementResult mean_segmentation_agreement(
    std::span<const std::pair<SegmentedTranscript, SegmentedTranscript>> pairs,
    const Embedder& embedder, RoleAgreement* per_role) {
  RoleAgreement sum;
  for (const auto& [a, b] : pairs) {
    const auto r = segmentation_agreement(a, b, embedder);
    sum.descriptive += r.descriptive;
    sum.expressive += r.expressive;
  }
  const double n = static_cast<double>(pairs.size());
  RoleAgreement mean;
  if (!pairs.empty()) mean = {sum.descriptive / n, sum.expressive / n};
  if (per_role) *per_role = mean;

  AgreementResult out;
  out.kind = AgreementKind::cosine;
  out.value = (mean.descriptive + mean.expressive) / 2.0;
  out.n_items = pairs.size();
  return out;
}

// -------------------------------------------------------------- distances

double masi_distance(LabelSet a, LabelSet b) {
  if (a.empty() && b.empty()) return 0.0;
  const double inter = static_cast<double>(a.intersect(b).size());
  const double uni = static_cast<double>(a.unite(b).size());
  const double jaccard = inter / uni;
  double monotonicity;
  if (a == b) {
    monotonicity = 1.0;
  } else if (a.subset_of(b) || b.subset_of(a)) {
    monotonicity = 2.0 / 3.0;
  } else if (inter > 0.0) {
    monotonicity = 1.0 / 3.0;
  } else {
    monotonicity = 0.0;
  }
  return 1.0 - jaccard * monotonicity;
}

double nominal_distance(LabelSet a, LabelSet b) { return a == b ? 0.0 : 1.0; }

// ----------------------------------------------------------------- alpha

AgreementResult krippendorff_alpha(std::span<const std::pair<LabelSet, LabelSet>> items,
                                   const LabelDistance& distance) {
  if (items.size() < 2) {
    throw Error(ErrorCode::invariant, "krippendorff_alpha needs at least 2 items, got " +
                                          std::to_string(items.size()));
  }
  // Observed: each item contributes its single within-item pair.
  double observed = 0.0;
  // Expected: value frequencies of the pooled 2n observations.
  std::array<double, 64> freq{};
  for (const auto& [a, b] : items) {
    observed += distance(a, b);
    freq[a.bits()] += 1.0;
    freq[b.bits()] += 1.0;
  }
  const double n_items = static_cast<double>(items.size());
  const double n_obs = 2.0 * n_items;
  observed /= n_items;

  double expected = 0.0;
  for (std::size_t c = 0; c < freq.size(); ++c) {
    if (freq[c] == 0.0) continue;
    for (std::size_t k = 0; k < freq.size(); ++k) {
      if (freq[k] == 0.0) continue;
      // Pairs of distinct observations: no observation is paired with itself.
      const double pairs = freq[c] * (freq[k] - (c == k ? 1.0 : 0.0));
      if (pairs == 0.0) continue;
      expected += pairs * distance(LabelSet(static_cast<std::uint8_t>(c)),
                                   LabelSet(static_cast<std::uint8_t>(k)));
    }
  }
  expected /= n_obs * (n_obs - 1.0);

  if (expected <= 0.0) {
    throw Error(ErrorCode::degenerate_data,
                "expected disagreement is 0: all observations are identical");
  }
  AgreementResult out;
  out.kind = AgreementKind::alpha;
  out.observed_disagreement = observed;
  out.expected_disagreement = expected;
  out.value = 1.0 - observed / expected;
  out.n_items = items.size();
  return out;
}

AgreementResult intended_vs_evoked_alpha(const Corpus& corpus, int threshold) {
  std::vector<std::pair<LabelSet, LabelSet>> items;
  items.reserve(corpus.records.size());
  for (const auto& r : corpus.records) {
    items.emplace_back(LabelSet{r.intended}, binarize_evoked(r.evoked, threshold));
  }
  return krippendorff_alpha(items, masi_distance);
}

}  // namespace emosem
