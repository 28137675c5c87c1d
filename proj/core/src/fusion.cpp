#include "domfuse/fusion.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace domfuse {
namespace {

using json = nlohmann::ordered_json;

Label argmax_label(double pos, double neg) {
    // tie goes to negative: a tie carries no evidence of the positive class
    return pos > neg ? Label::positive : Label::negative;
}

}  // namespace

AdjustedScores adjust_scores(const ClassifierScores& scores, double units,
                             const FusionConfig& config) {
    if (units == 0.0)
        return {scores.pos, scores.neg, 0.0};

    double adj = std::fabs(units) * config.unit_adjustment;
    double pos = units > 0.0 ? scores.pos - adj : scores.pos + adj;
    double neg = units > 0.0 ? scores.neg + adj : scores.neg - adj;

    // the printed rule can leave the simplex (|units| can reach 4.5, so adj
    // can reach ~0.5): clamp the violated side, complement the other
    if (pos < 0.0) {
        pos = 0.0;
        neg = 1.0;
    } else if (pos > 1.0) {
        pos = 1.0;
        neg = 0.0;
    }
    return {pos, neg, pos - scores.pos};
}

FusedPrediction fuse(const ImageRecord& record, const FusionConfig& config,
                     double abstain_threshold) {
    FusedPrediction out;
    auto persons = eligible_persons(record, config);
    if (persons.empty()) {
        // no person, no dominance signal: plain image classification
        out.pos = record.classifier.pos;
        out.neg = record.classifier.neg;
        out.fallback = true;
    } else {
        DominanceSummary summary = overall_dominance(persons);
        double units = dominance_units(summary.overall, config);
        AdjustedScores adjusted = adjust_scores(record.classifier, units, config);
        out.pos = adjusted.pos;
        out.neg = adjusted.neg;
        out.adjustment = adjusted.adjustment;
        out.dominance = summary;
    }
    out.label = argmax_label(out.pos, out.neg);
    out.abstained = std::max(out.pos, out.neg) < abstain_threshold;
    return out;
}

FusedPrediction vanilla_prediction(const ClassifierScores& scores, double abstain_threshold) {
    FusedPrediction out;
    out.pos = scores.pos;
    out.neg = scores.neg;
    out.label = argmax_label(out.pos, out.neg);
    out.abstained = std::max(out.pos, out.neg) < abstain_threshold;
    return out;
}

std::string to_json_line(const FusedPrediction& prediction, const std::string& id) {
    json j;
    j["id"] = id;
    j["pos"] = prediction.pos;
    j["neg"] = prediction.neg;
    j["label"] = std::string(to_string(prediction.label));
    j["abstained"] = prediction.abstained;
    j["fallback"] = prediction.fallback;
    j["adjustment"] = prediction.adjustment;
    j["overall_dominance"] = prediction.dominance ? json(prediction.dominance->overall) : json(nullptr);
    j["person_count"] = prediction.dominance ? prediction.dominance->person_count : 0;
    return j.dump();
}

std::pair<std::string, FusedPrediction> parse_fused_line(std::string_view text, std::size_t line) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw MalformedRecord("not valid JSON", line, {});
    if (!j.is_object())
        throw SchemaViolation("prediction must be a JSON object", line, {});
    try {
        std::string id = j.at("id").get<std::string>();
        FusedPrediction p;
        p.pos = j.at("pos").get<double>();
        p.neg = j.at("neg").get<double>();
        p.label = label_from_string(j.at("label").get<std::string>());
        p.abstained = j.at("abstained").get<bool>();
        p.fallback = j.at("fallback").get<bool>();
        p.adjustment = j.at("adjustment").get<double>();
        if (!j.at("overall_dominance").is_null())
            p.dominance = DominanceSummary{j.at("overall_dominance").get<double>(),
                                           j.at("person_count").get<std::size_t>()};
        return {std::move(id), p};
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("bad prediction line: ") + e.what(), line, {});
    }
}

}  // namespace domfuse
