#pragma once

#include <cstdint>
#include <vector>

#include "domfuse/fusion.hpp"
#include "domfuse/records.hpp"

namespace domfuse {

// Fixed, portable generator: splitmix64 (Steele/Lea/Vigna). All fixture
// randomness derives from it through arithmetic that is bit-stable across
// platforms (no libm, no std::*_distribution). Reference outputs for seed 0
// are frozen in the test suite.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform double in [0, 1), 53 significant bits
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform double in [lo, hi)
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // uniform integer in [lo, hi] (inclusive)
    std::uint64_t next_index(std::uint64_t lo, std::uint64_t hi) {
        std::uint64_t span = hi - lo + 1;
        auto idx = static_cast<std::uint64_t>(next_unit() * static_cast<double>(span));
        if (idx >= span) idx = span - 1;
        return lo + idx;
    }

private:
    std::uint64_t state_;
};

// Dominance sub-range each scenario draws from:
//   submissive [1, 4.5), neutral [4.5, 5.5], dominant (5.5, 10],
//   mixed picks one of the three per record.
enum class DominanceRegime { submissive, neutral, dominant, mixed };

DominanceRegime regime_from_string(std::string_view text);  // throws DomainViolation
std::string_view to_string(DominanceRegime regime);

// Recipe for a synthetic dataset. Generation is a pure function of this
// struct: same spec, same bytes, on every platform.
struct ScenarioSpec {
    std::size_t n_records = 0;
    std::uint64_t seed = 0;
    std::size_t person_count_min = 0;
    std::size_t person_count_max = 4;
    DominanceRegime regime = DominanceRegime::mixed;
    double classifier_sharpness = 2.0;  // > 0; larger = more confident score pairs
    double positive_fraction = 0.5;     // in [0, 1]

    void validate() const;  // throws DomainViolation
};

// Deterministic synthetic records: classifier score pairs sided with the
// drawn ground truth 4 times out of 5, person detections in the regime's
// dominance sub-range, occasional non-person detections, detector scores
// spanning the eligibility gate.
std::vector<ImageRecord> generate(const ScenarioSpec& spec);

// Independent reference for fuse(): a straight-line transcription of the
// adjustment rule (person gate, plain mean, band test, +-diff*factor,
// clamp to the probability simplex). Kept free of any call into the
// dominance/fusion modules so the two paths can check each other.
FusedPrediction oracle_fuse(const ImageRecord& record, const FusionConfig& config,
                            double abstain_threshold = kDefaultAbstainThreshold);

// Hand-shaped dataset exercising the label-flip behaviour: borderline
// classifier scores with strong dominance signal (flips), confident scores
// pushed past the abstain threshold (strengthens), plus neutral and
// person-free controls. Ground truth is dominance-consistent (submissive =>
// positive), so the fused pass covers strictly more than the vanilla pass.
// Each intended flip is verified against fuse() at generation time.
std::vector<ImageRecord> flip_scenario(std::uint64_t seed);

}  // namespace domfuse
