// domfuse: batch decision-fusion frontend.
//
// Subcommands: fuse, evaluate, gen-fixtures, report, self-check.
// Exit codes: 0 ok, 1 validation/domain failure, 2 I/O failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "domfuse/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

// I/O problems get their own exit code; everything else maps to 1.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// "-" selects the standard stream.
class InputStream {
public:
    explicit InputStream(const std::string& path) {
        if (path != "-") {
            file_.open(path);
            if (!file_)
                throw IoError("cannot open input file: " + path);
        }
    }
    std::istream& get() { return file_.is_open() ? file_ : std::cin; }

private:
    std::ifstream file_;
};

class OutputStream {
public:
    explicit OutputStream(const std::string& path) : path_(path) {
        if (path != "-") {
            file_.open(path, std::ios::trunc);
            if (!file_)
                throw IoError("cannot open output file: " + path);
        }
    }
    std::ostream& get() { return file_.is_open() ? file_ : std::cout; }
    void finish() {
        get().flush();
        if (!get())
            throw IoError("write failed: " + path_);
    }

private:
    std::string path_;
    std::ofstream file_;
};

struct CliState {
    domfuse::FuseOptions options;
    bool verbose = false;
};

void echo_config(const CliState& state) {
    const auto& f = state.options.fusion;
    std::cerr << "config: neutral band [" << f.neutral_low << ", " << f.neutral_high
              << "], unit adjustment " << f.unit_adjustment << ", person gate "
              << f.person_score_threshold << ", abstain threshold "
              << state.options.abstain_threshold << "\n";
}

std::string render_single_report(const domfuse::EvaluationReport& r,
                                 const domfuse::EvaluationConfig& config) {
    std::ostringstream out;
    auto pct = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
        return std::string(buf);
    };
    out << "n_total             " << r.n_total << "\n";
    out << "accuracy            " << pct(r.accuracy) << "\n";
    out << "coverage            " << pct(r.coverage) << "\n";
    out << "selective accuracy  "
        << (r.selective_accuracy ? pct(*r.selective_accuracy) : "n/a") << "\n";
    out << "confusion           tp " << r.confusion.tp << "  fp " << r.confusion.fp
        << "  tn " << r.confusion.tn << "  fn " << r.confusion.fn << "\n";
    char note[128];
    std::snprintf(note, sizeof note,
                  "abstention: max(pos, neg) >= %.2f (tool default, configurable)\n",
                  config.abstain_threshold);
    out << note;
    return out.str();
}

std::string render_delta_lines(const domfuse::ReportRow& row) {
    std::ostringstream out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "accuracy delta: %+.2f pts", row.accuracy_delta_points);
    out << buf;
    if (row.accuracy_relative_pct) {
        std::snprintf(buf, sizeof buf, " (%+.2f%% relative)", *row.accuracy_relative_pct);
        out << buf;
    }
    out << "\n";
    std::snprintf(buf, sizeof buf, "coverage delta: %+.2f pts", row.coverage_delta_points);
    out << buf;
    if (row.coverage_relative_pct) {
        std::snprintf(buf, sizeof buf, " (%+.2f%% relative)", *row.coverage_relative_pct);
        out << buf;
    }
    out << "\n";
    return out.str();
}

int cmd_fuse(const CliState& state, const std::string& input, const std::string& output) {
    InputStream in(input);
    OutputStream out(output);
    domfuse::FuseStats stats = domfuse::run_fuse(in.get(), out.get(), state.options);
    out.finish();
    for (const auto& msg : stats.errors)
        std::cerr << "error: " << msg << "\n";
    std::cerr << "fuse: " << stats.records << " records (" << stats.fallbacks
              << " fallback, " << stats.flips << " flips)\n";
    return stats.ok() ? kExitOk : kExitValidation;
}

int cmd_evaluate(const CliState& state, const std::string& input,
                 const std::string& predictions, const std::string& format,
                 const std::string& backbone) {
    domfuse::EvaluationConfig eval_config{state.options.abstain_threshold};
    domfuse::EvaluateResult result;
    if (predictions.empty()) {
        InputStream dataset(input);
        result = domfuse::run_evaluate(dataset.get(), state.options, backbone);
    } else {
        InputStream preds(predictions);
        InputStream dataset(input);
        result = domfuse::run_evaluate_predictions(preds.get(), dataset.get(), eval_config);
    }

    if (format == "json") {
        if (result.comparison)
            std::cout << domfuse::to_json(*result.comparison) << "\n";
        else
            std::cout << domfuse::to_json(result.report) << "\n";
    } else {
        if (result.comparison) {
            const domfuse::ReportRow row[] = {*result.comparison};
            std::cout << domfuse::render_table(row, eval_config);
            std::cout << render_delta_lines(*result.comparison);
        } else {
            std::cout << render_single_report(result.report, eval_config);
        }
    }
    std::cout.flush();
    if (!std::cout)
        throw IoError("write failed: stdout");
    return kExitOk;
}

int cmd_gen_fixtures(const domfuse::ScenarioSpec& spec, bool flip, const std::string& output) {
    std::vector<domfuse::ImageRecord> records =
        flip ? domfuse::flip_scenario(spec.seed) : domfuse::generate(spec);
    OutputStream out(output);
    for (const auto& rec : records)
        out.get() << domfuse::to_json_line(rec) << "\n";
    out.finish();
    std::cerr << "gen-fixtures: wrote " << records.size() << " records\n";
    return kExitOk;
}

int cmd_report(const CliState& state, const std::vector<std::string>& row_files,
               const std::string& output) {
    std::vector<domfuse::ReportRow> rows;
    for (const auto& path : row_files) {
        std::ifstream file(path);
        if (!file)
            throw IoError("cannot open report row file: " + path);
        std::stringstream buffer;
        buffer << file.rdbuf();
        rows.push_back(domfuse::report_row_from_json(buffer.str()));
    }
    domfuse::EvaluationConfig eval_config{state.options.abstain_threshold};
    OutputStream out(output);
    out.get() << domfuse::render_table(rows, eval_config);
    out.finish();
    return kExitOk;
}

int cmd_self_check(std::size_t n, std::uint64_t seed) {
    domfuse::SelfCheckResult result = domfuse::self_check(n, seed);
    if (result.ok) {
        std::cout << "self-check: ok (" << result.records_checked << " records)\n";
        return kExitOk;
    }
    std::cerr << "self-check: FAILED after " << result.records_checked << " records\n"
              << result.detail << "\n";
    return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dominance-weighted decision fusion over image classifier outputs"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file (flags override file values)");

    CliState state;
    app.add_flag("-v,--verbose", state.verbose, "echo the effective config to stderr");
    app.add_option("--neutral-low", state.options.fusion.neutral_low,
                   "lower edge of the dominance neutral band")
        ->envname("DOMFUSE_NEUTRAL_LOW")->capture_default_str();
    app.add_option("--neutral-high", state.options.fusion.neutral_high,
                   "upper edge of the dominance neutral band")
        ->envname("DOMFUSE_NEUTRAL_HIGH")->capture_default_str();
    app.add_option("--unit-adjustment", state.options.fusion.unit_adjustment,
                   "probability shift per dominance unit")
        ->envname("DOMFUSE_UNIT_ADJUSTMENT")->capture_default_str();
    app.add_option("--person-score-threshold", state.options.fusion.person_score_threshold,
                   "detector confidence gate for persons")
        ->envname("DOMFUSE_PERSON_SCORE_THRESHOLD")->capture_default_str();
    app.add_option("--abstain-threshold", state.options.abstain_threshold,
                   "confidence below which a prediction abstains")
        ->envname("DOMFUSE_ABSTAIN_THRESHOLD")->capture_default_str();

    auto* fuse_cmd = app.add_subcommand("fuse", "adjust classifier scores by dominance");
    std::string fuse_input, fuse_output;
    fuse_cmd->fallthrough();
    fuse_cmd->add_option("-i,--input", fuse_input, "record dataset (JSONL, - for stdin)")->required();
    fuse_cmd->add_option("-o,--output", fuse_output, "fused predictions (JSONL, - for stdout)")->required();
    fuse_cmd->add_flag("--keep-going", state.options.keep_going,
                       "report every bad line instead of stopping at the first");
    fuse_cmd->add_option("-j,--jobs", state.options.jobs, "worker threads")
        ->capture_default_str();

    auto* eval_cmd = app.add_subcommand("evaluate", "accuracy/coverage over a labelled dataset");
    std::string eval_input, eval_predictions, eval_format = "table", eval_backbone = "backbone";
    eval_cmd->fallthrough();
    eval_cmd->add_option("-i,--input", eval_input, "record dataset with ground truth")->required();
    eval_cmd->add_option("--predictions", eval_predictions,
                         "evaluate these fused predictions instead of re-fusing the dataset"
                         " (joined to ground truth by id, - for stdin)");
    eval_cmd->add_option("--format", eval_format, "table or json")
        ->check(CLI::IsMember({"table", "json"}))->capture_default_str();
    eval_cmd->add_option("--backbone", eval_backbone, "name shown in the comparison row")
        ->capture_default_str();

    auto* gen_cmd = app.add_subcommand("gen-fixtures", "deterministic synthetic datasets");
    domfuse::ScenarioSpec spec;
    spec.n_records = 100;
    std::string gen_output, gen_regime = "mixed";
    bool gen_flip = false;
    gen_cmd->fallthrough();
    gen_cmd->add_option("-o,--output", gen_output, "output path (JSONL, - for stdout)")->required();
    gen_cmd->add_option("-n,--n", spec.n_records, "number of records")->capture_default_str();
    gen_cmd->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
    gen_cmd->add_option("--person-min", spec.person_count_min, "min persons per record")
        ->capture_default_str();
    gen_cmd->add_option("--person-max", spec.person_count_max, "max persons per record")
        ->capture_default_str();
    gen_cmd->add_option("--regime", gen_regime, "submissive|neutral|dominant|mixed")
        ->capture_default_str();
    gen_cmd->add_option("--sharpness", spec.classifier_sharpness,
                        "classifier score concentration (> 0)")->capture_default_str();
    gen_cmd->add_option("--positive-fraction", spec.positive_fraction,
                        "fraction of positive ground-truth labels")->capture_default_str();
    gen_cmd->add_flag("--flip", gen_flip, "emit the label-flip scenario instead");

    auto* report_cmd = app.add_subcommand("report", "render comparison rows as a table");
    std::vector<std::string> report_rows;
    std::string report_output = "-";
    report_cmd->fallthrough();
    report_cmd->add_option("rows", report_rows, "row JSON files from evaluate --format json")
        ->required();
    report_cmd->add_option("--out", report_output, "output path (- for stdout)")
        ->capture_default_str();

    auto* check_cmd = app.add_subcommand("self-check", "fuse-vs-reference equivalence sweep");
    std::size_t check_n = 10000;
    std::uint64_t check_seed = 424242;
    check_cmd->fallthrough();
    check_cmd->add_option("-n,--n", check_n, "generated records to sweep")->capture_default_str();
    check_cmd->add_option("--seed", check_seed, "sweep seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // fold CLI11's usage-error codes into the documented 0/1/2 contract
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        state.options.fusion.validate();
        domfuse::EvaluationConfig{state.options.abstain_threshold}.validate();
        if (state.verbose)
            echo_config(state);

        if (fuse_cmd->parsed())
            return cmd_fuse(state, fuse_input, fuse_output);
        if (eval_cmd->parsed())
            return cmd_evaluate(state, eval_input, eval_predictions, eval_format, eval_backbone);
        if (gen_cmd->parsed()) {
            spec.regime = domfuse::regime_from_string(gen_regime);
            spec.validate();
            return cmd_gen_fixtures(spec, gen_flip, gen_output);
        }
        if (report_cmd->parsed())
            return cmd_report(state, report_rows, report_output);
        if (check_cmd->parsed())
            return cmd_self_check(check_n, check_seed);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const domfuse::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
