#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "domfuse/errors.hpp"

namespace domfuse {

// Binary class labels. "positive" means the target condition was recognised.
enum class Label { positive, negative };

std::string_view to_string(Label label);
Label label_from_string(std::string_view text);  // throws DomainViolation

// Axis-aligned detector box in pixel coordinates, x_min < x_max, y_min < y_max.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool operator==(const BoundingBox&) const = default;
};

// Continuous valence/arousal/dominance estimate, each axis on [1, 10].
struct VadTriplet {
    double valence = 5.0;
    double arousal = 5.0;
    double dominance = 5.0;

    bool operator==(const VadTriplet&) const = default;
};

// One detector output. vad is present exactly for "person" detections.
struct PersonDetection {
    std::string class_label;
    double score = 0.0;  // detector confidence in [0, 1]
    BoundingBox box;
    std::optional<VadTriplet> vad;

    bool is_person() const { return class_label == kPersonClass; }

    static constexpr std::string_view kPersonClass = "person";

    bool operator==(const PersonDetection&) const = default;
};

// Binary classifier probabilities; pos + neg == 1 (within 1e-9 on input,
// renormalized on ingestion when not exact).
struct ClassifierScores {
    double pos = 0.0;
    double neg = 0.0;

    bool operator==(const ClassifierScores&) const = default;
};

// All upstream model outputs for one image, plus the optional ground truth.
struct ImageRecord {
    std::string id;
    ClassifierScores classifier;
    std::vector<PersonDetection> detections;
    std::optional<Label> ground_truth;

    bool operator==(const ImageRecord&) const = default;
};

// Checks every type invariant of an in-memory record; throws DomainViolation
// or SchemaViolation naming the offending field. parse_record applies this to
// everything it accepts; it is public so synthetic records can be vetted too.
void validate(const ImageRecord& record, std::size_t line = 0);

// Parses one JSONL line into a validated record.
// Throws MalformedRecord (bad JSON), SchemaViolation (missing/unknown/wrongly
// typed field), DomainViolation (value outside its range). `line` is used for
// diagnostics only.
ImageRecord parse_record(std::string_view text, std::size_t line = 0);

// Serializes a record to one JSONL line (no trailing newline). Inverse of
// parse_record for every valid record.
std::string to_json_line(const ImageRecord& record);

// Reads a newline-delimited stream of records. Propagates per-line errors
// with line numbers and rejects duplicate ids.
std::vector<ImageRecord> load_dataset(std::istream& in);

}  // namespace domfuse
