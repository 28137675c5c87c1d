#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domfuse/fusion.hpp"

namespace domfuse {

struct EvaluationConfig {
    double abstain_threshold = kDefaultAbstainThreshold;  // in [0.5, 1.0]

    void validate() const;  // throws DomainViolation when out of range
};

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    bool operator==(const Confusion&) const = default;
};

// Accuracy & coverage over one labelled dataset.
//  - accuracy counts argmax correctness over ALL records, abstained or not;
//    it does not depend on the abstain threshold.
//  - coverage is the fraction with max(pos, neg) >= abstain_threshold.
//  - selective_accuracy is accuracy over the covered subset only, absent
//    when nothing is covered.
struct EvaluationReport {
    std::size_t n_total = 0;
    std::size_t n_covered = 0;
    std::size_t n_correct = 0;
    std::size_t n_correct_covered = 0;
    double accuracy = 0.0;
    double coverage = 0.0;
    std::optional<double> selective_accuracy;
    Confusion confusion;

    bool operator==(const EvaluationReport&) const = default;
};

// One prediction joined with its ground truth; id kept for diagnostics.
struct LabeledPrediction {
    std::string id;
    FusedPrediction prediction;
    std::optional<Label> ground_truth;
};

// Counts correctness and coverage over the dataset.
// Throws EmptyDataset, and MissingGroundTruth listing every offending id.
EvaluationReport evaluate(std::span<const LabeledPrediction> predictions,
                          const EvaluationConfig& config);

// Incremental form of evaluate() for streaming callers: add() one prediction
// at a time, or merge() partial tallies built on dataset slices. merge is
// associative and commutative, so parallel partial counts reach identical
// totals in any grouping.
class EvaluationTally {
public:
    explicit EvaluationTally(EvaluationConfig config);

    void add(const FusedPrediction& prediction, Label ground_truth);
    void merge(const EvaluationTally& other);
    std::size_t size() const { return counts_.n_total; }
    EvaluationReport report() const;  // throws EmptyDataset when nothing was added

private:
    EvaluationConfig config_;
    EvaluationReport counts_;
};

// Side-by-side vanilla/fused comparison for one backbone. Relative deltas are
// absent when the vanilla side of the ratio is zero.
struct ReportRow {
    std::string backbone;
    EvaluationReport vanilla;
    EvaluationReport fused;
    double accuracy_delta_points = 0.0;   // (fused - vanilla) * 100
    double coverage_delta_points = 0.0;
    std::optional<double> accuracy_relative_pct;  // delta / vanilla * 100
    std::optional<double> coverage_relative_pct;
};

// Builds the comparison row; both reports must describe the same dataset
// (equal n_total) or MismatchedDatasets is thrown.
ReportRow compare(const EvaluationReport& vanilla, const EvaluationReport& fused,
                  std::string backbone_name);

// ---- rendering ----

// Machine-readable forms carry every field.
std::string to_json(const EvaluationReport& report);
std::string to_json(const ReportRow& row);
EvaluationReport report_from_json(std::string_view text);
ReportRow report_row_from_json(std::string_view text);

// Aligned text table over one or more comparison rows: backbone, accuracy and
// coverage for both sides, the leading coverage entry per row marked with '*'.
// A mean row is appended when more than one row is given. The footer states
// the abstention rule so readers know it is a tool default, not part of the
// adjustment method itself.
std::string render_table(std::span<const ReportRow> rows, const EvaluationConfig& config);

}  // namespace domfuse
