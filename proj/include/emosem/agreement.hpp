#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emosem/corpus.hpp"
#include "emosem/emotion.hpp"
#include "emosem/segmenter.hpp"

namespace emosem {

class Embedder;

enum class AgreementKind { cosine, alpha };

struct AgreementResult {
  double value = 0.0;
  AgreementKind kind = AgreementKind::alpha;
  double observed_disagreement = 0.0;  // alpha only
  double expected_disagreement = 0.0;  // alpha only
  std::size_t n_items = 0;
};

/// dot(u,v) / (|u||v|); 0 when either norm is 0. Throws
/// ErrorCode::dimension_mismatch.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct RoleAgreement {
  double descriptive = 0.0;
  double expressive = 0.0;
};

/// Per-role cosine of the embedded role texts. Two empty role texts agree
/// perfectly (1.0); one empty against a non-empty one scores 0.
RoleAgreement segmentation_agreement(const SegmentedTranscript& a,
                                     const SegmentedTranscript& b,
                                     const Embedder& embedder);

/// Unweighted mean of segmentation_agreement over paired segmentations.
AgreementResult mean_segmentation_agreement(
    std::span<const std::pair<SegmentedTranscript, SegmentedTranscript>> pairs,
    const Embedder& embedder, RoleAgreement* per_role = nullptr);

using LabelDistance = std::function<double(LabelSet, LabelSet)>;

/// 1 - J(a,b) * m(a,b); J = 1 when both empty; m = 1 equal, 2/3 proper
/// subset, 1/3 overlapping, 0 disjoint.
double masi_distance(LabelSet a, LabelSet b);

/// 0 when equal, 1 otherwise.
double nominal_distance(LabelSet a, LabelSet b);

/// Two-annotator Krippendorff's alpha, no missing data.
///
/// Do is the mean within-item distance. De is the mean distance over all
/// ordered pairs of distinct observations drawn from the pooled 2n label
/// sets. Throws ErrorCode::degenerate_data when De = 0 and
/// ErrorCode::invariant for fewer than 2 items.
AgreementResult krippendorff_alpha(std::span<const std::pair<LabelSet, LabelSet>> items,
                                   const LabelDistance& distance = masi_distance);

/// Alpha (MASI) between annotator A = {intended} and annotator B =
/// binarize_evoked(record, threshold) over every record.
AgreementResult intended_vs_evoked_alpha(const Corpus& corpus,
                                         int threshold = kDefaultEvokedThreshold);

}  // namespace emosem
