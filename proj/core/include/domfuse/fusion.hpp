#pragma once

#include <optional>
#include <string>

#include "domfuse/dominance.hpp"
#include "domfuse/records.hpp"

namespace domfuse {

inline constexpr double kDefaultAbstainThreshold = 0.75;

// Final adjusted prediction for one image.
//  - adjustment is the delta actually applied to pos (after clamping), so
//    fused pos == raw pos + adjustment; 0 on the neutral and fallback paths.
//  - fallback is true when no eligible person was found and the raw
//    classifier scores passed through untouched.
struct FusedPrediction {
    double pos = 0.0;
    double neg = 0.0;
    Label label = Label::negative;
    bool abstained = false;
    double adjustment = 0.0;
    std::optional<DominanceSummary> dominance;
    bool fallback = false;

    bool operator==(const FusedPrediction&) const = default;
};

struct AdjustedScores {
    double pos = 0.0;
    double neg = 0.0;
    double adjustment = 0.0;
};

// Applies the dominance adjustment to a raw score pair.
//   units > 0 (in-control):  pos - adj, neg + adj
//   units < 0 (submissive):  pos + adj, neg - adj
//   units == 0:              scores pass through bitwise
// with adj = |units| * unit_adjustment. A result outside [0, 1] is clamped
// and the other side set to the complement, so pos + neg stays 1.
AdjustedScores adjust_scores(const ClassifierScores& scores, double units,
                             const FusionConfig& config);

// Full per-record decision: person gating -> mean dominance -> unit distance
// -> score adjustment. Person-free records fall back to the raw classifier
// scores. Label is argmax with ties resolved to negative; abstained is set
// when max(pos, neg) < abstain_threshold. Total over validated records.
FusedPrediction fuse(const ImageRecord& record, const FusionConfig& config,
                     double abstain_threshold = kDefaultAbstainThreshold);

// The unadjusted baseline view of a score pair, labelled and abstention-
// flagged the same way as fuse output. Used for vanilla-vs-fused comparisons.
FusedPrediction vanilla_prediction(const ClassifierScores& scores,
                                   double abstain_threshold = kDefaultAbstainThreshold);

// One JSONL output line (no trailing newline):
// {"id":..., "pos":..., "neg":..., "label":..., "abstained":..., "fallback":...,
//  "adjustment":..., "overall_dominance": float|null, "person_count": int}
std::string to_json_line(const FusedPrediction& prediction, const std::string& id);

// Parses a line written by to_json_line back into (id, prediction).
std::pair<std::string, FusedPrediction> parse_fused_line(std::string_view text,
                                                         std::size_t line = 0);

}  // namespace domfuse
