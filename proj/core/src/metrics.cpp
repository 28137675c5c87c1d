#include "domfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace domfuse {
namespace {

using json = nlohmann::ordered_json;

bool covered(const FusedPrediction& p, double threshold) {
    return std::max(p.pos, p.neg) >= threshold;
}

json report_to_json_obj(const EvaluationReport& r) {
    json j;
    j["n_total"] = r.n_total;
    j["n_covered"] = r.n_covered;
    j["n_correct"] = r.n_correct;
    j["n_correct_covered"] = r.n_correct_covered;
    j["accuracy"] = r.accuracy;
    j["coverage"] = r.coverage;
    j["selective_accuracy"] = r.selective_accuracy ? json(*r.selective_accuracy) : json(nullptr);
    j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp},
                      {"tn", r.confusion.tn}, {"fn", r.confusion.fn}};
    return j;
}

EvaluationReport report_from_json_obj(const json& j) {
    EvaluationReport r;
    r.n_total = j.at("n_total").get<std::size_t>();
    r.n_covered = j.at("n_covered").get<std::size_t>();
    r.n_correct = j.at("n_correct").get<std::size_t>();
    r.n_correct_covered = j.at("n_correct_covered").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.coverage = j.at("coverage").get<double>();
    if (!j.at("selective_accuracy").is_null())
        r.selective_accuracy = j.at("selective_accuracy").get<double>();
    const json& c = j.at("confusion");
    r.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                   c.at("tn").get<std::size_t>(), c.at("fn").get<std::size_t>()};
    return r;
}

std::string pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
    return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

void EvaluationConfig::validate() const {
    if (!(abstain_threshold >= 0.5 && abstain_threshold <= 1.0))
        throw DomainViolation("abstain_threshold must lie in [0.5, 1.0]", 0, {});
}

EvaluationTally::EvaluationTally(EvaluationConfig config) : config_(config) {
    config_.validate();
}

void EvaluationTally::add(const FusedPrediction& prediction, Label ground_truth) {
    bool is_covered = covered(prediction, config_.abstain_threshold);
    bool is_correct = prediction.label == ground_truth;
    ++counts_.n_total;
    if (is_covered) ++counts_.n_covered;
    if (is_correct) ++counts_.n_correct;
    if (is_covered && is_correct) ++counts_.n_correct_covered;
    if (prediction.label == Label::positive)
        ++(ground_truth == Label::positive ? counts_.confusion.tp : counts_.confusion.fp);
    else
        ++(ground_truth == Label::negative ? counts_.confusion.tn : counts_.confusion.fn);
}

void EvaluationTally::merge(const EvaluationTally& other) {
    counts_.n_total += other.counts_.n_total;
    counts_.n_covered += other.counts_.n_covered;
    counts_.n_correct += other.counts_.n_correct;
    counts_.n_correct_covered += other.counts_.n_correct_covered;
    counts_.confusion.tp += other.counts_.confusion.tp;
    counts_.confusion.fp += other.counts_.confusion.fp;
    counts_.confusion.tn += other.counts_.confusion.tn;
    counts_.confusion.fn += other.counts_.confusion.fn;
}

EvaluationReport EvaluationTally::report() const {
    if (counts_.n_total == 0)
        throw EmptyDataset();
    EvaluationReport r = counts_;
    r.accuracy = static_cast<double>(r.n_correct) / static_cast<double>(r.n_total);
    r.coverage = static_cast<double>(r.n_covered) / static_cast<double>(r.n_total);
    if (r.n_covered > 0)
        r.selective_accuracy =
            static_cast<double>(r.n_correct_covered) / static_cast<double>(r.n_covered);
    return r;
}

EvaluationReport evaluate(std::span<const LabeledPrediction> predictions,
                          const EvaluationConfig& config) {
    EvaluationTally tally(config);
    if (predictions.empty())
        throw EmptyDataset();

    std::string unlabeled;
    for (const auto& p : predictions) {
        if (!p.ground_truth) {
            if (!unlabeled.empty()) unlabeled += ", ";
            unlabeled += p.id;
        }
    }
    if (!unlabeled.empty())
        throw MissingGroundTruth(unlabeled);

    for (const auto& p : predictions)
        tally.add(p.prediction, *p.ground_truth);
    return tally.report();
}

ReportRow compare(const EvaluationReport& vanilla, const EvaluationReport& fused,
                  std::string backbone_name) {
    if (vanilla.n_total != fused.n_total)
        throw MismatchedDatasets(vanilla.n_total, fused.n_total);

    ReportRow row;
    row.backbone = std::move(backbone_name);
    row.vanilla = vanilla;
    row.fused = fused;
    row.accuracy_delta_points = (fused.accuracy - vanilla.accuracy) * 100.0;
    row.coverage_delta_points = (fused.coverage - vanilla.coverage) * 100.0;
    if (vanilla.accuracy != 0.0)
        row.accuracy_relative_pct = (fused.accuracy - vanilla.accuracy) / vanilla.accuracy * 100.0;
    if (vanilla.coverage != 0.0)
        row.coverage_relative_pct = (fused.coverage - vanilla.coverage) / vanilla.coverage * 100.0;
    return row;
}

std::string to_json(const EvaluationReport& report) {
    return report_to_json_obj(report).dump();
}

std::string to_json(const ReportRow& row) {
    json j;
    j["backbone"] = row.backbone;
    j["vanilla"] = report_to_json_obj(row.vanilla);
    j["fused"] = report_to_json_obj(row.fused);
    j["delta"] = {
        {"accuracy_points", row.accuracy_delta_points},
        {"coverage_points", row.coverage_delta_points},
        {"accuracy_relative_pct",
         row.accuracy_relative_pct ? json(*row.accuracy_relative_pct) : json(nullptr)},
        {"coverage_relative_pct",
         row.coverage_relative_pct ? json(*row.coverage_relative_pct) : json(nullptr)},
    };
    return j.dump();
}

EvaluationReport report_from_json(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw MalformedRecord("not valid JSON", 0, {});
    try {
        return report_from_json_obj(j);
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("bad report: ") + e.what(), 0, {});
    }
}

ReportRow report_row_from_json(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw MalformedRecord("not valid JSON", 0, {});
    try {
        ReportRow row;
        row.backbone = j.at("backbone").get<std::string>();
        row.vanilla = report_from_json_obj(j.at("vanilla"));
        row.fused = report_from_json_obj(j.at("fused"));
        const json& d = j.at("delta");
        row.accuracy_delta_points = d.at("accuracy_points").get<double>();
        row.coverage_delta_points = d.at("coverage_points").get<double>();
        if (!d.at("accuracy_relative_pct").is_null())
            row.accuracy_relative_pct = d.at("accuracy_relative_pct").get<double>();
        if (!d.at("coverage_relative_pct").is_null())
            row.coverage_relative_pct = d.at("coverage_relative_pct").get<double>();
        return row;
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("bad report row: ") + e.what(), 0, {});
    }
}

std::string render_table(std::span<const ReportRow> rows, const EvaluationConfig& config) {
    std::size_t name_width = 8;
    for (const auto& row : rows)
        name_width = std::max(name_width, row.backbone.size());
    const std::size_t col = 10;

    // the larger coverage entry per row gets the marker; ties mark neither
    auto coverage_cell = [&](double own, double other) {
        std::string s = pct(own);
        return pad_left(own > other ? "*" + s : s, col);
    };

    std::string out;
    out += pad_right("backbone", name_width + 2) + pad_left("vanilla CNN", 2 * col) +
           pad_left("fused", 2 * col) + "\n";
    out += pad_right("", name_width + 2) + pad_left("acc.", col) + pad_left("coverage", col) +
           pad_left("acc.", col) + pad_left("coverage", col) + "\n";
    out += std::string(name_width + 2 + 4 * col, '-') + "\n";

    auto emit = [&](const std::string& name, double va, double vc, double fa, double fc) {
        out += pad_right(name, name_width + 2);
        out += pad_left(pct(va), col);
        out += coverage_cell(vc, fc);
        out += pad_left(pct(fa), col);
        out += coverage_cell(fc, vc);
        out += "\n";
    };

    double va_sum = 0, vc_sum = 0, fa_sum = 0, fc_sum = 0;
    for (const auto& row : rows) {
        emit(row.backbone, row.vanilla.accuracy, row.vanilla.coverage,
             row.fused.accuracy, row.fused.coverage);
        va_sum += row.vanilla.accuracy;
        vc_sum += row.vanilla.coverage;
        fa_sum += row.fused.accuracy;
        fc_sum += row.fused.coverage;
    }
    if (rows.size() > 1) {
        auto n = static_cast<double>(rows.size());
        emit("mean", va_sum / n, vc_sum / n, fa_sum / n, fc_sum / n);
    }

    out += std::string(name_width + 2 + 4 * col, '-') + "\n";
    out += "* leading coverage entry\n";
    char note[128];
    std::snprintf(note, sizeof note,
                  "abstention: max(pos, neg) >= %.2f (tool default, configurable)\n",
                  config.abstain_threshold);
    out += note;
    return out;
}

}  // namespace domfuse
