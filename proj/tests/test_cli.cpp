#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "plabel/io.hpp"

namespace fs = std::filesystem;
using plabel::read_text_file;
using plabel::write_text_file;

namespace {

const fs::path kWork = fs::temp_directory_path() / "plabel_test_cli";

struct Run {
    int code;
    std::string err;
    std::string out;
};

Run run(const std::string& args) {
    const fs::path so = kWork / "stdout.txt", se = kWork / "stderr.txt";
    const std::string cmd = std::string("\"") + PLABEL_CLI + "\" " + args + " >\"" + so.string() + "\" 2>\"" +
                            se.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text_file(se), read_text_file(so)};
}

struct Fixture {
    Fixture() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "evaluate prints metrics for a score,label file") {
    write_text_file(kWork / "p.csv", "score,label\n0.9,1\n0.2,0\n0.7,1\n0.4,0\n");
    const Run r = run("evaluate " + (kWork / "p.csv").string() + " --out " + (kWork / "ev").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("auc      1") != std::string::npos);
    CHECK(fs::exists(kWork / "ev" / "metrics.csv"));
    CHECK(fs::exists(kWork / "ev" / "manifest.json"));
}

TEST_CASE_FIXTURE(Fixture, "evaluate with one class warns and succeeds") {
    write_text_file(kWork / "p.csv", "score,label\n0.9,1\n0.3,1\n");
    const Run r = run("evaluate " + (kWork / "p.csv").string() + " --out " + (kWork / "ev").string());
    CHECK(r.code == 0);
    CHECK(r.err.find("AUC is undefined") != std::string::npos);
    CHECK(r.out.find("undefined") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "malformed CSV names the offending line") {
    write_text_file(kWork / "p.csv", "score,label\n0.9,1\n0.2,oops\n");
    const Run r = run("evaluate " + (kWork / "p.csv").string() + " --out " + (kWork / "ev").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "config problems exit with status 2") {
    CHECK(run("experiment1 --config " + (kWork / "missing.json").string()).code == 2);
    write_text_file(kWork / "bad.json", R"({"reps": 2, "colour": "blue"})");
    const Run r = run("experiment1 --config " + (kWork / "bad.json").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("colour") != std::string::npos);
    write_text_file(kWork / "typed.json", R"({"reps": "many"})");
    CHECK(run("experiment1 --config " + (kWork / "typed.json").string()).code == 2);
    CHECK(run("no-such-command").code == 2);
    CHECK(run("evaluate").code == 2);
}

TEST_CASE_FIXTURE(Fixture, "experiment1 reruns from its manifest byte for byte") {
    write_text_file(kWork / "e1.json", R"({"reps": 2, "n_values": [2, 6], "minority_values": [5, 10],
        "test_counts": [200, 200], "epochs": 200, "example_n": 10})");
    const fs::path a = kWork / "a", b = kWork / "b";
    REQUIRE(run("experiment1 --quiet --config " + (kWork / "e1.json").string() + " --out " + a.string()).code == 0);
    REQUIRE(run("experiment1 --quiet --config " + (a / "manifest.json").string() + " --out " + b.string()).code == 0);
    for (const char* f : {"accuracy_vs_n.csv", "ece_vs_imbalance.csv", "example_train.csv", "example_model_prob.json"})
        CHECK(read_text_file(a / f) == read_text_file(b / f));

    // the example model feeds the boundary command
    const Run bd = run("boundary " + (a / "example_model_prob.json").string() + " --quiet --out " +
                       (kWork / "bd").string());
    CHECK(bd.code == 0);
    CHECK(read_text_file(kWork / "bd" / "boundary.svg").find("<svg") != std::string::npos);

    const Run cv = run("cv-lambda " + (a / "example_train.csv").string() + " --lambda-grid 0,1 --out " +
                       (kWork / "cv").string());
    CHECK(cv.code == 0);
    CHECK(cv.out.find("chosen lambda") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "a tampered manifest is rejected") {
    write_text_file(kWork / "m.json",
                    R"({"command": "experiment1", "config": {"reps": 1}, "config_hash": "0000000000000000"})");
    CHECK(run("experiment1 --config " + (kWork / "m.json").string()).code == 2);
}
