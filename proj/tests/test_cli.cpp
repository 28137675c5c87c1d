// End-to-end checks driving the installed binary through a shell. The binary
// path arrives via the DOMFUSE_CLI_PATH compile definition.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "domfuse/fusion.hpp"
#include "domfuse/metrics.hpp"
#include "domfuse/records.hpp"

namespace fs = std::filesystem;
using namespace domfuse;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

const fs::path& scratch_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("domfuse_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path scratch_file(const std::string& name) { return scratch_dir() / name; }

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    out << content;
    REQUIRE(out.good());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// args is a shell fragment; env is a prefix like "VAR=x " (already quoted)
RunResult run_cli(const std::string& args, const std::string& stdin_text = "",
                  const std::string& env = "") {
    static int counter = 0;
    fs::path in = scratch_file("stdin_" + std::to_string(counter));
    fs::path out = scratch_file("stdout_" + std::to_string(counter));
    fs::path err = scratch_file("stderr_" + std::to_string(counter));
    ++counter;
    write_file(in, stdin_text);

    std::string cmd = env + std::string(DOMFUSE_CLI_PATH) + " " + args + " < " +
                      in.string() + " > " + out.string() + " 2> " + err.string();
    int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = read_file(out);
    result.err = read_file(err);
    return result;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

const char* kThreeRecords =
    R"({"id":"a","classifier":{"pos":0.6,"neg":0.4},"detections":[{"class":"person","score":0.9,"box":[0,0,10,10],"vad":{"v":5,"a":5,"d":7.5}}],"ground_truth":"negative"})" "\n"
    R"({"id":"b","classifier":{"pos":0.5,"neg":0.5},"detections":[{"class":"person","score":0.9,"box":[0,0,10,10],"vad":{"v":5,"a":5,"d":3.5}}],"ground_truth":"positive"})" "\n"
    R"({"id":"c","classifier":{"pos":0.8,"neg":0.2},"detections":[],"ground_truth":"positive"})" "\n";

}  // namespace

TEST_CASE("fuse processes a small dataset end to end") {
    fs::path in = scratch_file("basic.jsonl");
    fs::path out = scratch_file("basic_fused.jsonl");
    write_file(in, kThreeRecords);

    auto result = run_cli("fuse -i " + in.string() + " -o " + out.string());
    CHECK(result.exit_code == 0);
    CHECK(result.err.find("fuse: 3 records") != std::string::npos);

    auto fused = lines_of(read_file(out));
    REQUIRE(fused.size() == 3);
    auto [id_a, pred_a] = parse_fused_line(fused[0]);
    CHECK(id_a == "a");
    CHECK(pred_a.pos == doctest::Approx(0.38).epsilon(1e-12));
    CHECK(pred_a.label == Label::negative);
    auto [id_c, pred_c] = parse_fused_line(fused[2]);
    CHECK(id_c == "c");
    CHECK(pred_c.fallback);
    CHECK(pred_c.pos == 0.8);
}

TEST_CASE("fuse reads stdin and writes stdout with dashes") {
    auto result = run_cli("fuse -i - -o -", kThreeRecords);
    CHECK(result.exit_code == 0);
    CHECK(lines_of(result.out).size() == 3);
}

TEST_CASE("a bad line stops the run and is named in the diagnostic") {
    fs::path in = scratch_file("bad2.jsonl");
    write_file(in,
               std::string(R"({"id":"a","classifier":{"pos":0.6,"neg":0.4},"detections":[]})") +
                   "\n{broken\n" +
                   R"({"id":"c","classifier":{"pos":0.8,"neg":0.2},"detections":[]})" + "\n");
    auto result = run_cli("fuse -i " + in.string() + " -o -");
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("line 2") != std::string::npos);
}

TEST_CASE("keep-going reports the bad line but fuses the rest") {
    fs::path in = scratch_file("bad2_keep.jsonl");
    write_file(in,
               std::string(R"({"id":"a","classifier":{"pos":0.6,"neg":0.4},"detections":[]})") +
                   "\n{broken\n" +
                   R"({"id":"c","classifier":{"pos":0.8,"neg":0.2},"detections":[]})" + "\n");
    auto result = run_cli("fuse --keep-going -i " + in.string() + " -o -");
    CHECK(result.exit_code == 1);  // errors happened, even if tolerated
    CHECK(result.err.find("line 2") != std::string::npos);
    auto fused = lines_of(result.out);
    REQUIRE(fused.size() == 2);
    CHECK(parse_fused_line(fused[0]).first == "a");
    CHECK(parse_fused_line(fused[1]).first == "c");
}

TEST_CASE("zero unit adjustment is an identity on the scores") {
    fs::path in = scratch_file("identity.jsonl");
    auto gen = run_cli("gen-fixtures -o " + in.string() +
                       " -n 50 --seed 5 --regime dominant --person-min 1");
    REQUIRE(gen.exit_code == 0);

    auto fused = run_cli("fuse --unit-adjustment 0.0 -i " + in.string() + " -o -");
    REQUIRE(fused.exit_code == 0);

    std::ifstream dataset(in);
    auto records = load_dataset(dataset);
    auto outputs = lines_of(fused.out);
    REQUIRE(outputs.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto [id, pred] = parse_fused_line(outputs[i]);
        CHECK(id == records[i].id);
        CHECK(pred.pos == records[i].classifier.pos);
        CHECK(pred.neg == records[i].classifier.neg);
        CHECK(pred.adjustment == 0.0);
    }
}

TEST_CASE("environment variable and config file match the flag") {
    fs::path in = scratch_file("env.jsonl");
    auto gen = run_cli("gen-fixtures -o " + in.string() +
                       " -n 30 --seed 6 --regime submissive --person-min 1");
    REQUIRE(gen.exit_code == 0);

    auto flagged = run_cli("fuse --unit-adjustment 0.05 -i " + in.string() + " -o -");
    auto env = run_cli("fuse -i " + in.string() + " -o -", "",
                       "DOMFUSE_UNIT_ADJUSTMENT=0.05 ");
    REQUIRE(flagged.exit_code == 0);
    REQUIRE(env.exit_code == 0);
    CHECK(env.out == flagged.out);

    fs::path config = scratch_file("knobs.toml");
    write_file(config, "unit-adjustment = 0.05\n");
    auto filed = run_cli("--config " + config.string() + " fuse -i " + in.string() + " -o -");
    REQUIRE(filed.exit_code == 0);
    CHECK(filed.out == flagged.out);

    // flags override the file
    fs::path config2 = scratch_file("knobs2.toml");
    write_file(config2, "unit-adjustment = 0.3\n");
    auto overridden = run_cli("--config " + config2.string() +
                              " fuse --unit-adjustment 0.05 -i " + in.string() + " -o -");
    REQUIRE(overridden.exit_code == 0);
    CHECK(overridden.out == flagged.out);
}

TEST_CASE("evaluate on a neutral fixture shows identical vanilla and fused sides") {
    fs::path in = scratch_file("neutral.jsonl");
    auto gen = run_cli("gen-fixtures -o " + in.string() +
                       " -n 80 --seed 9 --regime neutral --person-min 1");
    REQUIRE(gen.exit_code == 0);

    auto result = run_cli("evaluate -i " + in.string() + " --format json");
    REQUIRE(result.exit_code == 0);
    auto row = report_row_from_json(result.out);
    CHECK(row.vanilla == row.fused);
    CHECK(row.accuracy_delta_points == 0.0);
    CHECK(row.coverage_delta_points == 0.0);

    auto table = run_cli("evaluate -i " + in.string() + " --backbone demo_net");
    REQUIRE(table.exit_code == 0);
    CHECK(table.out.find("demo_net") != std::string::npos);
    CHECK(table.out.find("accuracy delta: +0.00 pts") != std::string::npos);
}

TEST_CASE("evaluate rejects an empty dataset") {
    fs::path in = scratch_file("empty.jsonl");
    write_file(in, "");
    auto result = run_cli("evaluate -i " + in.string());
    CHECK(result.exit_code == 1);
}

TEST_CASE("evaluate names records missing ground truth") {
    fs::path in = scratch_file("unlabeled.jsonl");
    write_file(in,
               std::string(R"({"id":"ok_1","classifier":{"pos":0.9,"neg":0.1},"detections":[],"ground_truth":"positive"})") + "\n" +
               R"({"id":"gap_7","classifier":{"pos":0.8,"neg":0.2},"detections":[],"ground_truth":null})" + "\n");
    auto result = run_cli("evaluate -i " + in.string());
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("gap_7") != std::string::npos);
}

TEST_CASE("fused predictions can be piped back into evaluate") {
    fs::path in = scratch_file("pipe.jsonl");
    auto gen = run_cli("gen-fixtures -o " + in.string() + " -n 60 --seed 12 --person-min 0");
    REQUIRE(gen.exit_code == 0);

    fs::path preds = scratch_file("pipe_fused.jsonl");
    auto fused = run_cli("fuse -i " + in.string() + " -o " + preds.string());
    REQUIRE(fused.exit_code == 0);

    auto from_preds = run_cli("evaluate --predictions " + preds.string() + " -i " +
                              in.string() + " --format json");
    REQUIRE(from_preds.exit_code == 0);
    auto raw_mode = run_cli("evaluate -i " + in.string() + " --format json");
    REQUIRE(raw_mode.exit_code == 0);

    // the standalone report must equal the fused side of the comparison row
    CHECK(report_from_json(from_preds.out) == report_row_from_json(raw_mode.out).fused);
}

TEST_CASE("gen-fixtures is deterministic for a fixed seed") {
    fs::path a = scratch_file("det_a.jsonl"), b = scratch_file("det_b.jsonl");
    REQUIRE(run_cli("gen-fixtures -o " + a.string() + " -n 200 --seed 7").exit_code == 0);
    REQUIRE(run_cli("gen-fixtures -o " + b.string() + " -n 200 --seed 7").exit_code == 0);
    CHECK(read_file(a) == read_file(b));
    CHECK(!read_file(a).empty());
}

TEST_CASE("gen-fixtures --flip emits the label-flip scenario") {
    auto result = run_cli("gen-fixtures -o - --flip --seed 7");
    REQUIRE(result.exit_code == 0);
    auto records = lines_of(result.out);
    CHECK(records.size() == 24);
    CHECK(result.out.find("flip_sub_") != std::string::npos);
    CHECK(result.out.find("nobody_") != std::string::npos);
}

TEST_CASE("fuse output is identical across worker counts and repeat runs") {
    fs::path in = scratch_file("jobs.jsonl");
    REQUIRE(run_cli("gen-fixtures -o " + in.string() + " -n 500 --seed 13").exit_code == 0);

    auto serial = run_cli("fuse -j 1 -i " + in.string() + " -o -");
    auto parallel = run_cli("fuse -j 4 -i " + in.string() + " -o -");
    auto again = run_cli("fuse -j 4 -i " + in.string() + " -o -");
    REQUIRE(serial.exit_code == 0);
    REQUIRE(parallel.exit_code == 0);
    CHECK(serial.out == parallel.out);
    CHECK(parallel.out == again.out);
}

TEST_CASE("self-check passes quickly on a reduced sweep") {
    auto result = run_cli("self-check -n 500");
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("self-check: ok") != std::string::npos);
}

TEST_CASE("report renders saved rows") {
    fs::path in = scratch_file("rows.jsonl");
    REQUIRE(run_cli("gen-fixtures -o " + in.string() + " -n 40 --seed 15").exit_code == 0);
    auto row = run_cli("evaluate -i " + in.string() + " --format json --backbone saved_net");
    REQUIRE(row.exit_code == 0);
    fs::path row_file = scratch_file("row.json");
    write_file(row_file, row.out);

    auto table = run_cli("report " + row_file.string());
    CHECK(table.exit_code == 0);
    CHECK(table.out.find("saved_net") != std::string::npos);
}

TEST_CASE("failure exit codes") {
    SUBCASE("missing input file is an I/O failure") {
        auto result = run_cli("fuse -i /nonexistent/nope.jsonl -o -");
        CHECK(result.exit_code == 2);
        CHECK(result.err.find("cannot open") != std::string::npos);
    }
    SUBCASE("out-of-range config is a validation failure") {
        auto result = run_cli("fuse --abstain-threshold 0.3 -i - -o -");
        CHECK(result.exit_code == 1);
    }
    SUBCASE("usage errors are validation failures") {
        CHECK(run_cli("fuse").exit_code == 1);              // missing required options
        CHECK(run_cli("no-such-command").exit_code == 1);
        CHECK(run_cli("evaluate -i - --format yaml").exit_code == 1);
    }
    SUBCASE("help exits cleanly") {
        auto result = run_cli("--help");
        CHECK(result.exit_code == 0);
        CHECK(result.out.find("fuse") != std::string::npos);
    }
}

TEST_CASE("verbose echoes the effective config") {
    auto result = run_cli("-v self-check -n 10");
    CHECK(result.exit_code == 0);
    CHECK(result.err.find("config:") != std::string::npos);
    CHECK(result.err.find("0.11") != std::string::npos);
}
