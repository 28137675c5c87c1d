#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace domfuse {

// Base for every error this library raises on bad input. Programming errors
// (violated preconditions) use assert/logic_error instead.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---- dataset ingestion ----

// Carries the 1-based line number (0 = unknown) and the record id when one
// could be recovered from the offending line.
class RecordError : public Error {
public:
    RecordError(const std::string& msg, std::size_t line, std::string id)
        : Error(format(msg, line, id)), line_(line), id_(std::move(id)) {}

    std::size_t line() const { return line_; }
    const std::string& record_id() const { return id_; }

private:
    static std::string format(const std::string& msg, std::size_t line, const std::string& id) {
        std::string out;
        if (line > 0) out += "line " + std::to_string(line) + ": ";
        out += msg;
        if (!id.empty()) out += " (record \"" + id + "\")";
        return out;
    }

    std::size_t line_;
    std::string id_;
};

// Line is not valid JSON.
class MalformedRecord : public RecordError {
public:
    using RecordError::RecordError;
};

// JSON is valid but a field is missing, unknown, or of the wrong type.
class SchemaViolation : public RecordError {
public:
    using RecordError::RecordError;
};

// A value lies outside its allowed range (score, VAD scale, box geometry, ...).
class DomainViolation : public RecordError {
public:
    using RecordError::RecordError;
};

// Two records in one dataset share an id.
class DuplicateId : public RecordError {
public:
    using RecordError::RecordError;
};

// ---- dominance / fusion ----

class EmptyPersonList : public Error {
public:
    EmptyPersonList() : Error("overall dominance needs at least one person; route person-free images to the fallback path") {}
};

// ---- evaluation ----

class MissingGroundTruth : public Error {
public:
    explicit MissingGroundTruth(const std::string& ids)
        : Error("records lack a ground-truth label: " + ids) {}
};

class EmptyDataset : public Error {
public:
    EmptyDataset() : Error("dataset is empty") {}
};

class MismatchedDatasets : public Error {
public:
    MismatchedDatasets(std::size_t lhs, std::size_t rhs)
        : Error("reports cover different datasets (n_total " + std::to_string(lhs) +
                " vs " + std::to_string(rhs) + ")") {}
};

}  // namespace domfuse
