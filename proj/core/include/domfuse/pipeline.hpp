#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "domfuse/fixtures.hpp"
#include "domfuse/metrics.hpp"

namespace domfuse {

// Batch engine behind the CLI subcommands. Everything here is stream-to-
// stream so it can be driven from tests without touching the filesystem.

struct FuseOptions {
    FusionConfig fusion;
    double abstain_threshold = kDefaultAbstainThreshold;
    bool keep_going = false;  // report every bad line instead of stopping at the first
    std::size_t jobs = 1;     // worker threads; output order is input order regardless
};

struct FuseStats {
    std::size_t records = 0;
    std::size_t fallbacks = 0;
    std::size_t flips = 0;  // fused label != raw argmax label
    std::vector<std::string> errors;  // non-empty only with keep_going

    bool ok() const { return errors.empty(); }
};

// Streams a record dataset through fuse(), one output line per input line in
// input order. Throws RecordError subclasses on the first bad line unless
// keep_going is set, in which case diagnostics accumulate in the stats.
FuseStats run_fuse(std::istream& in, std::ostream& out, const FuseOptions& options);

struct EvaluateResult {
    std::optional<ReportRow> comparison;  // set when evaluating a raw dataset
    EvaluationReport report;              // the fused (or supplied-predictions) report
};

// Evaluates a raw dataset: vanilla argmax vs the fused path, plus the
// comparison row. Throws MissingGroundTruth / EmptyDataset.
EvaluateResult run_evaluate(std::istream& dataset, const FuseOptions& options,
                            const std::string& backbone_name);

// Evaluates externally produced predictions against the ground truth of the
// matching dataset, joined by record id. Unknown or missing ids are domain
// errors.
EvaluateResult run_evaluate_predictions(std::istream& predictions, std::istream& dataset,
                                        const EvaluationConfig& config);

struct SelfCheckResult {
    bool ok = true;
    std::size_t records_checked = 0;
    std::string detail;  // first mismatch: record id plus both outputs
};

// Fuse-vs-oracle equivalence over `n_records` generated records (all three
// dominance regimes, saturating adjustments, person-free and band-boundary
// records) plus the frozen worked examples. Labels and flags must agree
// exactly, scores within 1e-12.
SelfCheckResult self_check(std::size_t n_records = 10000, std::uint64_t seed = 424242);

}  // namespace domfuse
