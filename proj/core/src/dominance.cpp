#include "domfuse/dominance.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace domfuse {

void FusionConfig::validate() const {
    if (!(neutral_low >= 1.0 && neutral_low <= neutral_high && neutral_high <= 10.0))
        throw DomainViolation("neutral band must satisfy 1 <= low <= high <= 10", 0, {});
    if (!(unit_adjustment >= 0.0) || !std::isfinite(unit_adjustment))
        throw DomainViolation("unit_adjustment must be >= 0", 0, {});
    if (!(person_score_threshold >= 0.0 && person_score_threshold <= 1.0))
        throw DomainViolation("person_score_threshold must lie in [0, 1]", 0, {});
}

std::vector<PersonDetection> eligible_persons(const ImageRecord& record,
                                              const FusionConfig& config) {
    std::vector<PersonDetection> persons;
    for (const auto& det : record.detections)
        if (det.is_person() && det.score >= config.person_score_threshold)
            persons.push_back(det);
    return persons;
}

DominanceSummary overall_dominance(std::span<const PersonDetection> persons) {
    if (persons.empty())
        throw EmptyPersonList();

    // Neumaier-compensated sum in input order; the clamp pins the mean into
    // the input hull so identical inputs come back exactly.
    double sum = 0.0, compensation = 0.0;
    double lo = persons.front().vad->dominance;
    double hi = lo;
    for (const auto& person : persons) {
        assert(person.vad.has_value());
        double d = person.vad->dominance;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
        double t = sum + d;
        compensation += std::fabs(sum) >= std::fabs(d) ? (sum - t) + d : (d - t) + sum;
        sum = t;
    }
    double mean = (sum + compensation) / static_cast<double>(persons.size());
    return DominanceSummary{std::clamp(mean, lo, hi), persons.size()};
}

double dominance_units(double overall, const FusionConfig& config) {
    if (overall > config.neutral_high) return overall - config.neutral_high;
    if (overall < config.neutral_low) return overall - config.neutral_low;
    return 0.0;  // band edges included
}

}  // namespace domfuse
