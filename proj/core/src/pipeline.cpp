#include "domfuse/pipeline.hpp"

#include <cmath>
#include <exception>
#include <istream>
#include <ostream>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace domfuse {
namespace {

// One processed input line, ready to drain in input order.
struct FusedLine {
    std::size_t line_no = 0;
    std::string id;
    std::string out;
    bool fallback = false;
    bool flip = false;
    std::exception_ptr error;
};

FusedLine process_line(const std::string& text, std::size_t line_no, const FuseOptions& options) {
    FusedLine slot;
    slot.line_no = line_no;
    try {
        ImageRecord rec = parse_record(text, line_no);
        FusedPrediction fused = fuse(rec, options.fusion, options.abstain_threshold);
        FusedPrediction raw = vanilla_prediction(rec.classifier, options.abstain_threshold);
        slot.id = rec.id;
        slot.out = to_json_line(fused, rec.id);
        slot.fallback = fused.fallback;
        slot.flip = fused.label != raw.label;
    } catch (...) {
        slot.error = std::current_exception();
    }
    return slot;
}

class FuseDrain {
public:
    FuseDrain(std::ostream& out, const FuseOptions& options, FuseStats& stats)
        : out_(out), options_(options), stats_(stats) {}

    // Consumes slots in input order; throws on the first error unless
    // keep_going collects diagnostics instead.
    void drain(FusedLine& slot) {
        if (!slot.error) {
            if (!seen_ids_.insert(slot.id).second)
                slot.error = std::make_exception_ptr(DuplicateId("duplicate record id", slot.line_no, slot.id));
        }
        if (slot.error) {
            if (!options_.keep_going)
                std::rethrow_exception(slot.error);
            try {
                std::rethrow_exception(slot.error);
            } catch (const std::exception& e) {
                stats_.errors.emplace_back(e.what());
            }
            return;
        }
        out_ << slot.out << '\n';
        ++stats_.records;
        if (slot.fallback) ++stats_.fallbacks;
        if (slot.flip) ++stats_.flips;
    }

private:
    std::ostream& out_;
    const FuseOptions& options_;
    FuseStats& stats_;
    std::unordered_set<std::string> seen_ids_;
};

}  // namespace

FuseStats run_fuse(std::istream& in, std::ostream& out, const FuseOptions& options) {
    options.fusion.validate();
    EvaluationConfig{options.abstain_threshold}.validate();

    FuseStats stats;
    FuseDrain drain(out, options, stats);
    std::string line;
    std::size_t line_no = 0;

    if (options.jobs <= 1) {
        // serial path holds one record at a time
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            FusedLine slot = process_line(line, line_no, options);
            drain.drain(slot);
        }
        return stats;
    }

    // Parallel path: fixed-size chunks fanned out over worker threads, then
    // drained in input order so output bytes never depend on the job count.
    const std::size_t chunk_target = options.jobs * 512;
    std::vector<std::pair<std::size_t, std::string>> chunk;
    std::vector<FusedLine> slots;
    chunk.reserve(chunk_target);

    auto flush_chunk = [&] {
        slots.assign(chunk.size(), {});
        std::vector<std::jthread> workers;
        std::size_t n_workers = std::min(options.jobs, std::max<std::size_t>(chunk.size(), 1));
        workers.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) {
            workers.emplace_back([&, w] {
                for (std::size_t i = w; i < chunk.size(); i += n_workers)
                    slots[i] = process_line(chunk[i].second, chunk[i].first, options);
            });
        }
        workers.clear();  // join
        for (auto& slot : slots)
            drain.drain(slot);
        chunk.clear();
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        chunk.emplace_back(line_no, std::move(line));
        if (chunk.size() >= chunk_target)
            flush_chunk();
    }
    if (!chunk.empty())
        flush_chunk();
    return stats;
}

EvaluateResult run_evaluate(std::istream& dataset, const FuseOptions& options,
                            const std::string& backbone_name) {
    options.fusion.validate();
    EvaluationConfig eval_config{options.abstain_threshold};
    EvaluationTally vanilla_tally(eval_config);
    EvaluationTally fused_tally(eval_config);

    std::unordered_set<std::string> seen_ids;
    std::string line, unlabeled;
    std::size_t line_no = 0;
    while (std::getline(dataset, line)) {
        ++line_no;
        if (line.empty()) continue;
        ImageRecord rec = parse_record(line, line_no);
        if (!seen_ids.insert(rec.id).second)
            throw DuplicateId("duplicate record id", line_no, rec.id);
        if (!rec.ground_truth) {
            if (!unlabeled.empty()) unlabeled += ", ";
            unlabeled += rec.id;
            continue;
        }
        vanilla_tally.add(vanilla_prediction(rec.classifier, options.abstain_threshold),
                          *rec.ground_truth);
        fused_tally.add(fuse(rec, options.fusion, options.abstain_threshold),
                        *rec.ground_truth);
    }
    if (!unlabeled.empty())
        throw MissingGroundTruth(unlabeled);

    EvaluateResult result;
    result.report = fused_tally.report();
    result.comparison = compare(vanilla_tally.report(), result.report, backbone_name);
    return result;
}

EvaluateResult run_evaluate_predictions(std::istream& predictions, std::istream& dataset,
                                        const EvaluationConfig& config) {
    std::unordered_map<std::string, std::optional<Label>> truths;
    {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(dataset, line)) {
            ++line_no;
            if (line.empty()) continue;
            ImageRecord rec = parse_record(line, line_no);
            if (!truths.emplace(rec.id, rec.ground_truth).second)
                throw DuplicateId("duplicate record id", line_no, rec.id);
        }
    }

    EvaluationTally tally(config);
    std::unordered_set<std::string> seen_ids;
    std::string line, unlabeled;
    std::size_t line_no = 0;
    while (std::getline(predictions, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto [id, prediction] = parse_fused_line(line, line_no);
        if (!seen_ids.insert(id).second)
            throw DuplicateId("duplicate prediction id", line_no, id);
        auto it = truths.find(id);
        if (it == truths.end())
            throw DomainViolation("prediction id not present in the dataset", line_no, id);
        if (!it->second) {
            if (!unlabeled.empty()) unlabeled += ", ";
            unlabeled += id;
            continue;
        }
        tally.add(prediction, *it->second);
    }
    if (!unlabeled.empty())
        throw MissingGroundTruth(unlabeled);

    EvaluateResult result;
    result.report = tally.report();
    return result;
}

namespace {

ImageRecord probe_record(std::string id, double pos, std::vector<double> dominances,
                         double person_score = 0.9) {
    ImageRecord rec;
    rec.id = std::move(id);
    rec.classifier = {pos, 1.0 - pos};
    for (double d : dominances) {
        PersonDetection det;
        det.class_label = "person";
        det.score = person_score;
        det.box = {0.0, 0.0, 50.0, 100.0};
        det.vad = VadTriplet{5.0, 5.0, d};
        rec.detections.push_back(std::move(det));
    }
    return rec;
}

// Band edges, saturation both ways, gate filtering, multi-person means,
// person-free fallback. Complements the bulk random sweep.
std::vector<ImageRecord> edge_records() {
    std::vector<ImageRecord> edge;
    edge.push_back(probe_record("edge_band_low", 0.6, {4.5}));
    edge.push_back(probe_record("edge_band_high", 0.6, {5.5}));
    edge.push_back(probe_record("edge_band_mid", 0.6, {5.0}));
    edge.push_back(probe_record("edge_saturate_neg", 0.8, {1.0}));
    edge.push_back(probe_record("edge_saturate_pos", 0.3, {10.0}));
    edge.push_back(probe_record("edge_multi_mean", 0.45, {4.0, 6.0, 8.0}));
    edge.push_back(probe_record("edge_below_gate", 0.7, {2.0}, 0.3));
    edge.push_back(probe_record("edge_person_free", 0.8, {}));
    auto rec = probe_record("edge_distractor_only", 0.25, {});
    PersonDetection car;
    car.class_label = "car";
    car.score = 0.99;
    car.box = {1.0, 1.0, 2.0, 2.0};
    rec.detections.push_back(std::move(car));
    edge.push_back(std::move(rec));
    return edge;
}

std::string describe_mismatch(const ImageRecord& rec, const FusedPrediction& fused,
                              const FusedPrediction& reference) {
    return "mismatch on record " + rec.id + "\n  fuse:   " + to_json_line(fused, rec.id) +
           "\n  oracle: " + to_json_line(reference, rec.id);
}

bool scores_agree(const FusedPrediction& a, const FusedPrediction& b) {
    constexpr double tol = 1e-12;
    if (std::fabs(a.pos - b.pos) > tol || std::fabs(a.neg - b.neg) > tol ||
        std::fabs(a.adjustment - b.adjustment) > tol)
        return false;
    if (a.dominance.has_value() != b.dominance.has_value())
        return false;
    if (a.dominance &&
        (std::fabs(a.dominance->overall - b.dominance->overall) > tol ||
         a.dominance->person_count != b.dominance->person_count))
        return false;
    return true;
}

bool flags_agree(const FusedPrediction& a, const FusedPrediction& b) {
    return a.label == b.label && a.abstained == b.abstained && a.fallback == b.fallback;
}

struct WorkedExample {
    ImageRecord record;
    double expect_pos;
    double expect_neg;
    bool expect_fallback;
    Label expect_label;
};

// Frozen by-hand evaluations of the adjustment rule.
std::vector<WorkedExample> worked_examples() {
    return {
        // mean 7.5 -> +2 units -> adj 0.22 subtracted from pos
        {probe_record("worked_dominant", 0.6, {7.5}), 0.38, 0.62, false, Label::negative},
        // mean 4.5 - 1 = one unit below the band -> adj 0.11 added to pos
        {probe_record("worked_submissive", 0.5, {3.5}), 0.61, 0.39, false, Label::positive},
        // inside the band: untouched
        {probe_record("worked_neutral", 0.6, {5.0}), 0.6, 0.4, false, Label::positive},
        // no person: untouched, fallback flagged
        {probe_record("worked_fallback", 0.8, {}), 0.8, 0.2, true, Label::positive},
        // mean 2.5 -> adj 0.22 added: overturns the raw negative call
        {probe_record("worked_flip", 0.45, {2.0, 3.0}), 0.67, 0.33, false, Label::positive},
    };
}

}  // namespace

SelfCheckResult self_check(std::size_t n_records, std::uint64_t seed) {
    const FusionConfig config;
    SelfCheckResult result;

    ScenarioSpec spec;
    spec.n_records = n_records;
    spec.seed = seed;
    spec.person_count_min = 0;
    spec.person_count_max = 5;
    spec.regime = DominanceRegime::mixed;

    std::vector<ImageRecord> records = generate(spec);
    for (auto& rec : edge_records())
        records.push_back(std::move(rec));

    for (const auto& rec : records) {
        FusedPrediction fused = fuse(rec, config);
        FusedPrediction reference = oracle_fuse(rec, config);
        ++result.records_checked;
        if (!flags_agree(fused, reference) || !scores_agree(fused, reference)) {
            result.ok = false;
            result.detail = describe_mismatch(rec, fused, reference);
            return result;
        }
    }

    constexpr double tol = 1e-12;
    for (const auto& ex : worked_examples()) {
        FusedPrediction fused = fuse(ex.record, config);
        ++result.records_checked;
        if (std::fabs(fused.pos - ex.expect_pos) > tol ||
            std::fabs(fused.neg - ex.expect_neg) > tol ||
            fused.fallback != ex.expect_fallback || fused.label != ex.expect_label) {
            result.ok = false;
            FusedPrediction expected;
            expected.pos = ex.expect_pos;
            expected.neg = ex.expect_neg;
            expected.fallback = ex.expect_fallback;
            expected.label = ex.expect_label;
            result.detail = describe_mismatch(ex.record, fused, expected);
            return result;
        }
    }

    // neutral identity must be bitwise, not just within tolerance
    for (double edge_dominance : {4.5, 5.0, 5.5}) {
        ImageRecord rec = probe_record("edge_bitwise", 0.6172839, {edge_dominance});
        FusedPrediction fused = fuse(rec, config);
        ++result.records_checked;
        if (fused.pos != rec.classifier.pos || fused.neg != rec.classifier.neg ||
            fused.adjustment != 0.0) {
            result.ok = false;
            result.detail = "neutral band identity violated at dominance " +
                            std::to_string(edge_dominance);
            return result;
        }
    }
    return result;
}

}  // namespace domfuse
