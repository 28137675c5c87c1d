#include "domfuse/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace domfuse {
namespace {

// Jitter-free building blocks. Only +,-,*,/ on doubles so generated values
// are identical bit patterns on every IEEE-754 platform.

// Concentrates u in [0,1) toward 1; k = 1 is the identity. Rational on
// purpose (pow() is not bit-stable across libms).
double concentrate(double u, double k) {
    return k * u / (1.0 + (k - 1.0) * u);
}

// Score pair with exact pos + neg == 1: the confident side is built first in
// [0.5, 1], the other as its complement.
ClassifierScores make_scores(double confidence, bool lean_positive) {
    double big = 0.5 + 0.5 * confidence;
    double small = 1.0 - big;
    return lean_positive ? ClassifierScores{big, small} : ClassifierScores{small, big};
}

BoundingBox random_box(SplitMix64& rng) {
    double x0 = rng.next_in(0.0, 480.0);
    double y0 = rng.next_in(0.0, 480.0);
    double w = rng.next_in(8.0, 128.0);
    double h = rng.next_in(8.0, 128.0);
    return {x0, y0, x0 + w, y0 + h};
}

double draw_dominance(SplitMix64& rng, DominanceRegime regime) {
    double u = rng.next_unit();
    switch (regime) {
        case DominanceRegime::submissive: return 1.0 + u * 3.5;          // [1, 4.5)
        case DominanceRegime::neutral:    return 4.5 + u;                // [4.5, 5.5)
        case DominanceRegime::dominant:   return 5.5 + (1.0 - u) * 4.5;  // (5.5, 10]
        case DominanceRegime::mixed:      break;
    }
    throw std::logic_error("mixed regime must be resolved per record");
}

PersonDetection make_person(SplitMix64& rng, DominanceRegime regime) {
    PersonDetection det;
    det.class_label = "person";
    det.score = rng.next_unit();  // spans the eligibility gate
    det.box = random_box(rng);
    det.vad = VadTriplet{rng.next_in(1.0, 10.0), rng.next_in(1.0, 10.0),
                         draw_dominance(rng, regime)};
    return det;
}

constexpr const char* kDistractorClasses[] = {"car", "tent", "backpack", "dog"};

PersonDetection make_distractor(SplitMix64& rng) {
    PersonDetection det;
    det.class_label = kDistractorClasses[rng.next_index(0, 3)];
    det.score = rng.next_unit();
    det.box = random_box(rng);
    return det;
}

std::string record_id(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%06zu", prefix, i);
    return buf;
}

}  // namespace

DominanceRegime regime_from_string(std::string_view text) {
    if (text == "submissive") return DominanceRegime::submissive;
    if (text == "neutral") return DominanceRegime::neutral;
    if (text == "dominant") return DominanceRegime::dominant;
    if (text == "mixed") return DominanceRegime::mixed;
    throw DomainViolation("regime must be submissive|neutral|dominant|mixed, got \"" +
                              std::string(text) + "\"", 0, {});
}

std::string_view to_string(DominanceRegime regime) {
    switch (regime) {
        case DominanceRegime::submissive: return "submissive";
        case DominanceRegime::neutral: return "neutral";
        case DominanceRegime::dominant: return "dominant";
        case DominanceRegime::mixed: return "mixed";
    }
    return "mixed";
}

void ScenarioSpec::validate() const {
    if (person_count_min > person_count_max)
        throw DomainViolation("person_count_min must be <= person_count_max", 0, {});
    if (!(classifier_sharpness > 0.0) || !std::isfinite(classifier_sharpness))
        throw DomainViolation("classifier_sharpness must be > 0", 0, {});
    if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0))
        throw DomainViolation("positive_fraction must lie in [0, 1]", 0, {});
}

std::vector<ImageRecord> generate(const ScenarioSpec& spec) {
    spec.validate();
    SplitMix64 rng(spec.seed);
    std::vector<ImageRecord> records;
    records.reserve(spec.n_records);

    for (std::size_t i = 0; i < spec.n_records; ++i) {
        ImageRecord rec;
        rec.id = record_id("rec_", i);
        rec.ground_truth = rng.next_unit() < spec.positive_fraction ? Label::positive
                                                                    : Label::negative;
        // classifier sides with the truth 4 times out of 5
        bool sided = rng.next_unit() < 0.8;
        bool lean_positive = (*rec.ground_truth == Label::positive) == sided;
        rec.classifier = make_scores(concentrate(rng.next_unit(), spec.classifier_sharpness),
                                     lean_positive);

        DominanceRegime regime = spec.regime;
        if (regime == DominanceRegime::mixed)
            regime = static_cast<DominanceRegime>(rng.next_index(0, 2));

        auto n_persons = static_cast<std::size_t>(
            rng.next_index(spec.person_count_min, spec.person_count_max));
        for (std::size_t p = 0; p < n_persons; ++p)
            rec.detections.push_back(make_person(rng, regime));
        auto n_extra = static_cast<std::size_t>(rng.next_index(0, 2));
        for (std::size_t p = 0; p < n_extra; ++p)
            rec.detections.push_back(make_distractor(rng));

        records.push_back(std::move(rec));
    }
    return records;
}

FusedPrediction oracle_fuse(const ImageRecord& record, const FusionConfig& config,
                            double abstain_threshold) {
    // Straight-line reference. Deliberately repeats the whole rule instead of
    // calling into dominance/fusion, so a defect there cannot hide here.
    std::vector<double> dominances;
    for (const auto& det : record.detections)
        if (det.class_label == "person" && det.score >= config.person_score_threshold)
            dominances.push_back(det.vad->dominance);

    FusedPrediction out;
    if (dominances.empty()) {
        out.pos = record.classifier.pos;
        out.neg = record.classifier.neg;
        out.fallback = true;
        out.adjustment = 0.0;
    } else {
        double sum = 0.0;
        for (double d : dominances) sum += d;
        double weight = sum / static_cast<double>(dominances.size());

        double s_pos = record.classifier.pos;
        double s_neg = record.classifier.neg;
        if (weight >= config.neutral_low && weight <= config.neutral_high) {
            // neutral: scores pass through
        } else if (weight > config.neutral_high) {
            double diff = weight - config.neutral_high;
            double adj = diff * config.unit_adjustment;
            s_pos = s_pos - adj;
            s_neg = s_neg + adj;
        } else {
            double diff = config.neutral_low - weight;
            double adj = diff * config.unit_adjustment;
            s_pos = s_pos + adj;
            s_neg = s_neg - adj;
        }
        if (s_pos < 0.0) {
            s_pos = 0.0;
            s_neg = 1.0;
        } else if (s_pos > 1.0) {
            s_pos = 1.0;
            s_neg = 0.0;
        }
        out.pos = s_pos;
        out.neg = s_neg;
        out.adjustment = s_pos - record.classifier.pos;
        out.dominance = DominanceSummary{weight, dominances.size()};
    }
    out.label = out.pos > out.neg ? Label::positive : Label::negative;
    out.abstained = std::max(out.pos, out.neg) < abstain_threshold;
    return out;
}

std::vector<ImageRecord> flip_scenario(std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<ImageRecord> records;
    const FusionConfig config;

    auto add = [&](const char* prefix, std::size_t i, double pos_lo, double pos_hi,
                   double dom_lo, double dom_hi, Label truth) -> ImageRecord {
        ImageRecord rec;
        rec.id = record_id(prefix, i);
        rec.ground_truth = truth;
        double p = rng.next_in(pos_lo, pos_hi);
        if (p >= 0.5) {
            rec.classifier = {p, 1.0 - p};
        } else {
            double n = 1.0 - p;  // build from the confident side, sum stays exactly 1
            rec.classifier = {1.0 - n, n};
        }
        for (int person = 0; person < 2; ++person) {
            PersonDetection det;
            det.class_label = "person";
            det.score = rng.next_in(0.6, 1.0);  // all above the default gate
            det.box = random_box(rng);
            det.vad = VadTriplet{rng.next_in(1.0, 10.0), rng.next_in(1.0, 10.0),
                                 rng.next_in(dom_lo, dom_hi)};
            rec.detections.push_back(std::move(det));
        }
        records.push_back(rec);
        return rec;
    };
    auto check_flip = [&](const ImageRecord& rec) {
        if (fuse(rec, config).label == vanilla_prediction(rec.classifier).label)
            throw std::logic_error("flip fixture " + rec.id + " failed to flip");
    };
    auto check_strengthen = [&](const ImageRecord& rec) {
        auto fused = fuse(rec, config);
        auto raw = vanilla_prediction(rec.classifier);
        if (fused.label != raw.label ||
            std::max(fused.pos, fused.neg) <= std::max(raw.pos, raw.neg))
            throw std::logic_error("strengthen fixture " + rec.id + " failed to strengthen");
    };

    // Flips: borderline raw scores overturned by a strong dominance signal.
    // Both mean dominances land ~2 units outside the band, adj ~0.22.
    for (std::size_t i = 0; i < 4; ++i)
        check_flip(add("flip_sub_", i, 0.40, 0.49, 2.3, 2.8, Label::positive));
    for (std::size_t i = 0; i < 4; ++i)
        check_flip(add("flip_dom_", i, 0.51, 0.60, 7.6, 8.0, Label::negative));

    // Strengthens: already-right labels pushed past the abstain threshold,
    // so the fused pass covers these and the vanilla pass does not.
    for (std::size_t i = 0; i < 4; ++i)
        check_strengthen(add("str_sub_", i, 0.58, 0.65, 2.0, 2.5, Label::positive));
    for (std::size_t i = 0; i < 4; ++i)
        check_strengthen(add("str_dom_", i, 0.35, 0.42, 7.5, 8.0, Label::negative));

    // Controls: neutral dominance and person-free records change nothing.
    for (std::size_t i = 0; i < 4; ++i)
        add("neutral_", i, 0.45, 0.55, 4.6, 5.4, Label::negative);
    for (std::size_t i = 0; i < 4; ++i) {
        ImageRecord rec;
        rec.id = record_id("nobody_", i);
        bool lean_positive = i % 2 == 0;
        rec.classifier = make_scores(concentrate(rng.next_unit(), 3.0), lean_positive);
        rec.ground_truth = lean_positive ? Label::positive : Label::negative;
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace domfuse
