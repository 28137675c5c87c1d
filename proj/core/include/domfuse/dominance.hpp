#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "domfuse/records.hpp"

namespace domfuse {

// Image-level dominance: mean of the per-person dominance estimates.
// Never built from zero persons, and overall always lies within the
// [min, max] of the contributing values.
struct DominanceSummary {
    double overall = 5.0;     // in [1, 10]
    std::size_t person_count = 0;

    bool operator==(const DominanceSummary&) const = default;
};

// Knobs of the score-adjustment rule. Defaults are the recommended
// operating point; all of them are sweepable.
struct FusionConfig {
    double neutral_low = 4.5;    // lower edge of the no-adjustment band
    double neutral_high = 5.5;   // upper edge, inclusive on both ends
    double unit_adjustment = 0.11;  // probability shift per dominance unit
    double person_score_threshold = 0.5;  // detector confidence gate

    // throws DomainViolation unless 1 <= low <= high <= 10,
    // unit_adjustment >= 0 (0 disables adjustment) and
    // person_score_threshold in [0, 1]
    void validate() const;
};

// Detections that participate in the dominance average: class "person" with
// detector score >= threshold, kept in input order.
std::vector<PersonDetection> eligible_persons(const ImageRecord& record,
                                              const FusionConfig& config);

// Mean dominance over a non-empty person list (throws EmptyPersonList).
// Every element must carry a VAD triplet. Summation runs in input order with
// compensation, and the result is clamped into [min, max] of the inputs so
// identical inputs reproduce exactly.
DominanceSummary overall_dominance(std::span<const PersonDetection> persons);

// Signed distance of `overall` from the neutral band edges:
//   0 inside [neutral_low, neutral_high] (both ends inclusive),
//   overall - neutral_high above it (> 0),
//   overall - neutral_low below it (< 0).
double dominance_units(double overall, const FusionConfig& config);

}  // namespace domfuse
