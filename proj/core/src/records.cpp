#include "domfuse/records.hpp"

#include <cmath>
#include <istream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace domfuse {
namespace {

using json = nlohmann::ordered_json;

constexpr double kScoreSumTolerance = 1e-9;

// Pulls the id out early so error messages can name the record even when the
// failure is elsewhere in the line.
std::string sniff_id(const json& j) {
    if (j.is_object() && j.contains("id") && j["id"].is_string())
        return j["id"].get<std::string>();
    return {};
}

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const char* where, std::size_t line, const std::string& id) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (key == k) { known = true; break; }
        if (!known)
            throw SchemaViolation(std::string("unknown field \"") + key + "\" in " + where, line, id);
    }
}

const json& require_field(const json& obj, const char* key, const char* where,
                          std::size_t line, const std::string& id) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaViolation(std::string(where) + " is missing \"" + key + "\"", line, id);
    return *it;
}

double require_number(const json& value, const char* what, std::size_t line, const std::string& id) {
    if (!value.is_number())
        throw SchemaViolation(std::string(what) + " must be a number", line, id);
    double v = value.get<double>();
    if (!std::isfinite(v))
        throw DomainViolation(std::string(what) + " must be finite", line, id);
    return v;
}

std::string require_string(const json& value, const char* what, std::size_t line, const std::string& id) {
    if (!value.is_string())
        throw SchemaViolation(std::string(what) + " must be a string", line, id);
    return value.get<std::string>();
}

BoundingBox parse_box(const json& value, std::size_t line, const std::string& id) {
    if (!value.is_array() || value.size() != 4)
        throw SchemaViolation("\"box\" must be [x_min, y_min, x_max, y_max]", line, id);
    BoundingBox b;
    b.x_min = require_number(value[0], "box x_min", line, id);
    b.y_min = require_number(value[1], "box y_min", line, id);
    b.x_max = require_number(value[2], "box x_max", line, id);
    b.y_max = require_number(value[3], "box y_max", line, id);
    return b;
}

VadTriplet parse_vad(const json& value, std::size_t line, const std::string& id) {
    if (!value.is_object())
        throw SchemaViolation("\"vad\" must be an object", line, id);
    require_keys(value, {"v", "a", "d"}, "\"vad\"", line, id);
    VadTriplet t;
    t.valence = require_number(require_field(value, "v", "\"vad\"", line, id), "vad.v", line, id);
    t.arousal = require_number(require_field(value, "a", "\"vad\"", line, id), "vad.a", line, id);
    t.dominance = require_number(require_field(value, "d", "\"vad\"", line, id), "vad.d", line, id);
    return t;
}

void check_box(const BoundingBox& b, std::size_t line, const std::string& id) {
    for (double v : {b.x_min, b.y_min, b.x_max, b.y_max})
        if (!(std::isfinite(v) && v >= 0.0))
            throw DomainViolation("box coordinates must be non-negative reals", line, id);
    if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max))
        throw DomainViolation("box must satisfy x_min < x_max and y_min < y_max", line, id);
}

void check_vad(const VadTriplet& t, std::size_t line, const std::string& id) {
    auto on_scale = [](double v) { return v >= 1.0 && v <= 10.0; };
    if (!on_scale(t.valence) || !on_scale(t.arousal) || !on_scale(t.dominance))
        throw DomainViolation("vad components must lie in [1, 10]", line, id);
}

void check_detection(const PersonDetection& d, std::size_t line, const std::string& id) {
    if (d.class_label.empty())
        throw DomainViolation("detection class must be non-empty", line, id);
    if (!(d.score >= 0.0 && d.score <= 1.0))
        throw DomainViolation("detection score must lie in [0, 1]", line, id);
    check_box(d.box, line, id);
    if (d.is_person() != d.vad.has_value())
        throw SchemaViolation(d.is_person()
                                  ? "\"person\" detection is missing \"vad\""
                                  : "\"vad\" is only allowed on \"person\" detections",
                              line, id);
    if (d.vad) check_vad(*d.vad, line, id);
}

}  // namespace

std::string_view to_string(Label label) {
    return label == Label::positive ? "positive" : "negative";
}

Label label_from_string(std::string_view text) {
    if (text == "positive") return Label::positive;
    if (text == "negative") return Label::negative;
    throw DomainViolation("label must be \"positive\" or \"negative\", got \"" + std::string(text) + "\"", 0, {});
}

void validate(const ImageRecord& record, std::size_t line) {
    if (record.id.empty())
        throw DomainViolation("record id must be non-empty", line, record.id);
    const auto& c = record.classifier;
    if (!(c.pos >= 0.0 && c.pos <= 1.0) || !(c.neg >= 0.0 && c.neg <= 1.0))
        throw DomainViolation("classifier scores must lie in [0, 1]", line, record.id);
    if (!(std::fabs(c.pos + c.neg - 1.0) <= kScoreSumTolerance))
        throw DomainViolation("classifier pos + neg must sum to 1", line, record.id);
    for (const auto& det : record.detections)
        check_detection(det, line, record.id);
}

ImageRecord parse_record(std::string_view text, std::size_t line) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw MalformedRecord("not valid JSON", line, {});
    if (!j.is_object())
        throw SchemaViolation("record must be a JSON object", line, {});

    const std::string id = sniff_id(j);
    require_keys(j, {"id", "classifier", "detections", "ground_truth"}, "record", line, id);

    ImageRecord rec;
    rec.id = require_string(require_field(j, "id", "record", line, id), "\"id\"", line, id);

    const json& cls = require_field(j, "classifier", "record", line, id);
    if (!cls.is_object())
        throw SchemaViolation("\"classifier\" must be an object", line, id);
    require_keys(cls, {"pos", "neg"}, "\"classifier\"", line, id);
    rec.classifier.pos = require_number(require_field(cls, "pos", "\"classifier\"", line, id), "classifier.pos", line, id);
    rec.classifier.neg = require_number(require_field(cls, "neg", "\"classifier\"", line, id), "classifier.neg", line, id);

    // absent detections means "nothing was detected"; the fallback path owns it
    if (auto it = j.find("detections"); it != j.end()) {
        if (!it->is_array())
            throw SchemaViolation("\"detections\" must be an array", line, id);
        for (const json& dj : *it) {
            if (!dj.is_object())
                throw SchemaViolation("each detection must be an object", line, id);
            require_keys(dj, {"class", "score", "box", "vad"}, "detection", line, id);
            PersonDetection det;
            det.class_label = require_string(require_field(dj, "class", "detection", line, id), "detection class", line, id);
            det.score = require_number(require_field(dj, "score", "detection", line, id), "detection score", line, id);
            det.box = parse_box(require_field(dj, "box", "detection", line, id), line, id);
            if (auto vit = dj.find("vad"); vit != dj.end() && !vit->is_null())
                det.vad = parse_vad(*vit, line, id);
            rec.detections.push_back(std::move(det));
        }
    }

    if (auto it = j.find("ground_truth"); it != j.end() && !it->is_null())
        rec.ground_truth = label_from_string(require_string(*it, "\"ground_truth\"", line, id));

    validate(rec, line);

    // Tolerate float serialization noise: a pair summing to 1 within 1e-9 is
    // renormalized onto the simplex. The complement form keeps the pair
    // stable under a second parse, so round-trips are exact.
    double sum = rec.classifier.pos + rec.classifier.neg;
    if (sum != 1.0) {
        rec.classifier.pos = rec.classifier.pos / sum;
        rec.classifier.neg = 1.0 - rec.classifier.pos;
    }
    return rec;
}

std::string to_json_line(const ImageRecord& record) {
    json j;
    j["id"] = record.id;
    j["classifier"] = {{"pos", record.classifier.pos}, {"neg", record.classifier.neg}};
    json dets = json::array();
    for (const auto& det : record.detections) {
        json dj;
        dj["class"] = det.class_label;
        dj["score"] = det.score;
        dj["box"] = {det.box.x_min, det.box.y_min, det.box.x_max, det.box.y_max};
        if (det.vad)
            dj["vad"] = {{"v", det.vad->valence}, {"a", det.vad->arousal}, {"d", det.vad->dominance}};
        dets.push_back(std::move(dj));
    }
    j["detections"] = std::move(dets);
    j["ground_truth"] = record.ground_truth ? json(std::string(to_string(*record.ground_truth))) : json(nullptr);
    return j.dump();
}

std::vector<ImageRecord> load_dataset(std::istream& in) {
    std::vector<ImageRecord> records;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ImageRecord rec = parse_record(line, line_no);
        if (!seen.insert(rec.id).second)
            throw DuplicateId("duplicate record id", line_no, rec.id);
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace domfuse
