#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fitkd/cli.hpp"
#include "fitkd/report.hpp"

using namespace fitkd;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    return path;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// run_cli with stdout/stderr captured, so usage errors and reports can be
// asserted without touching the test's own output.
struct CliResult {
    int rc = 0;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
    std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
    CliResult result;
    result.rc = run_cli(args);
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    result.out = out.str();
    result.err = err.str();
    return result;
}

// Small end-to-end settings: one-epoch models over the 8-skill catalog.
std::string chain_config(const TempDir& dir) {
    return write_file(dir.file("chain.cfg"),
                      "seed = 7\n"
                      "out_dir = " + dir.file("run") + "\n"
                      "skill_catalog = 8\n"
                      "dataset.count = 12\n"
                      "dataset.eval_count = 4\n"
                      "teacher.layers = 1\n"
                      "teacher.dim = 8\n"
                      "teacher.heads = 2\n"
                      "teacher.mlp = 16\n"
                      "train.epochs = 1\n"
                      "train.batch = 8\n"
                      "student.layers = 1\n"
                      "student.dim = 8\n"
                      "student.heads = 2\n"
                      "student.mlp = 16\n"
                      "distill.epochs = 1\n"
                      "distill.batch = 8\n");
}

}  // namespace

TEST_CASE("usage errors exit nonzero without work") {
    CHECK(run({}).rc != 0);                       // subcommand required
    CHECK(run({"frobnicate"}).rc != 0);           // unknown subcommand
    CHECK(run({"datagen"}).rc != 0);              // --config is required
    CHECK(run({"datagen", "--config", "x", "--format", "yaml"}).rc != 0);
    CHECK(run({"--help"}).rc == 0);
    CHECK(run({"--help"}).out.find("datagen") != std::string::npos);
}

TEST_CASE("config problems surface as one-line diagnostics") {
    TempDir dir("fitkd_cli_cfg");
    SUBCASE("missing config file") {
        const CliResult r = run({"datagen", "--config", dir.file("absent.cfg")});
        CHECK(r.rc == 1);
        CHECK(r.err.find("absent.cfg") != std::string::npos);
        CHECK(r.err.find("fitkd: error:") == 0);
    }
    SUBCASE("unknown key") {
        const std::string cfg = write_file(dir.file("bad.cfg"), "seed = 1\nbogus = 2\n");
        const CliResult r = run({"datagen", "--config", cfg});
        CHECK(r.rc == 1);
        CHECK(r.err.find("bogus") != std::string::npos);
    }
    SUBCASE("missing teacher checkpoint names its path") {
        const std::string cfg = chain_config(dir);
        REQUIRE(run({"datagen", "--config", cfg}).rc == 0);
        const CliResult r = run({"distill-exp", "--config", cfg});
        CHECK(r.rc == 1);
        CHECK(r.err.find("teacher.ckpt") != std::string::npos);
    }
}

TEST_CASE("datagen is byte-reproducible and seed-sensitive") {
    TempDir dir("fitkd_cli_datagen");
    const std::string cfg = write_file(dir.file("gen.cfg"),
                                       "seed = 3\n"
                                       "skill_catalog = 8\n"
                                       "dataset.count = 10\n"
                                       "dataset.eval_count = 4\n");

    REQUIRE(run({"datagen", "--config", cfg, "--out", dir.file("a")}).rc == 0);
    REQUIRE(run({"datagen", "--config", cfg, "--out", dir.file("b")}).rc == 0);
    CHECK(read_file(dir.file("a/records.jsonl")) == read_file(dir.file("b/records.jsonl")));
    CHECK(read_file(dir.file("a/eval.jsonl")) == read_file(dir.file("b/eval.jsonl")));

    REQUIRE(run({"datagen", "--config", cfg, "--out", dir.file("c"), "--seed", "4"}).rc == 0);
    CHECK(read_file(dir.file("a/records.jsonl")) != read_file(dir.file("c/records.jsonl")));

    SUBCASE("the manifest records the run") {
        const auto manifest =
            nlohmann::json::parse(read_file(dir.file("a/datagen-manifest.json")));
        CHECK(manifest.at("subcommand") == "datagen");
        CHECK(manifest.at("seed") == 3);
        CHECK(manifest.at("config_digest").get<std::string>().size() == 16);
        CHECK(manifest.at("artifacts").size() == 2);
        CHECK(manifest.contains("wall_clock_seconds"));
    }
}

TEST_CASE("train/distill/eval chain runs end to end") {
    TempDir dir("fitkd_cli_chain");
    const std::string cfg = chain_config(dir);
    REQUIRE(run({"datagen", "--config", cfg}).rc == 0);

    const CliResult teacher = run({"train-teacher", "--config", cfg});
    REQUIRE(teacher.rc == 0);
    CHECK(std::filesystem::exists(dir.file("run/teacher.ckpt")));
    CHECK(teacher.out.find("epoch") != std::string::npos);  // loss table on stdout

    const CliResult student = run({"distill-exp", "--config", cfg, "--format", "machine"});
    REQUIRE(student.rc == 0);
    CHECK(std::filesystem::exists(dir.file("run/student.ckpt")));
    CHECK(std::filesystem::exists(dir.file("run/student-loss.jsonl")));

    const CliResult eval = run({"eval", "--config", cfg, "--format", "machine"});
    REQUIRE(eval.rc == 0);
    const auto rows = read_report(dir.file("run/eval-report.jsonl"));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].at("records") == 4);
    CHECK(rows[0].at("nll").get<double>() > 0.0);
    CHECK(rows[0].contains("rouge1"));
    CHECK(rows[0].contains("decode_failures"));

    SUBCASE("report renders the machine file as the same table layout") {
        const CliResult rendered = run({"report", "--in", dir.file("run/eval-report.jsonl")});
        CHECK(rendered.rc == 0);
        CHECK(rendered.out.find("checkpoint") != std::string::npos);
        CHECK(rendered.out.find("student.ckpt") != std::string::npos);

        const CliResult machine = run({"report", "--in", dir.file("run/eval-report.jsonl"),
                                       "--format", "machine"});
        CHECK(machine.rc == 0);
        CHECK(nlohmann::json::parse(machine.out.substr(0, machine.out.find('\n')))
                  .contains("nll"));

        CHECK(run({"report", "--in", dir.file("run/missing.jsonl")}).rc == 1);
    }
}

TEST_CASE("serve answers from trained checkpoints") {
    TempDir dir("fitkd_cli_serve");
    const std::string cfg = write_file(
        dir.file("serve.cfg"),
        "seed = 11\n"
        "out_dir = " + dir.file("run") + "\n"
        "skill_catalog = 8\n"
        "cls.per_label = 4\n"
        "cls.layers = 1\n"
        "cls.dim = 8\n"
        "cls.heads = 2\n"
        "cls.mlp = 16\n"
        "cls_train.epochs = 1\n"
        "cls_train.batch = 8\n");
    REQUIRE(run({"distill-cls", "--config", cfg}).rc == 0);

    const CliResult r = run({"serve", "--config", cfg, "--format", "machine", "--job",
                             "req skill03 years 4 required perk gym lunch coffee", "--profile",
                             "has skill03 years 6"});
    REQUIRE(r.rc == 0);
    const auto reply = nlohmann::json::parse(r.out);
    CHECK((reply.at("fit") == "low" || reply.at("fit") == "medium" || reply.at("fit") == "high"));
    CHECK(reply.at("rating").get<double>() > 0.0);
    CHECK(reply.at("compressed_ratio").get<double>() <= 1.0);
    CHECK_FALSE(reply.contains("explanation"));  // --explain not passed

    SUBCASE("the same request is answered identically") {
        const CliResult again = run({"serve", "--config", cfg, "--format", "machine", "--job",
                                     "req skill03 years 4 required perk gym lunch coffee",
                                     "--profile", "has skill03 years 6"});
        CHECK(again.out == r.out);
    }
}
