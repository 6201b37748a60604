#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "osids/pipeline.hpp"

// end-to-end tests of the installed binary; OSIDS_CLI_PATH is injected by
// the build

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("osids_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args, const std::string& stderr_to = "") {
    std::string cmd = std::string(OSIDS_CLI_PATH) + " " + args;
    if (!stderr_to.empty())
        cmd += " 2> " + stderr_to;
    else
        cmd += " 2> /dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

const char* kSpecJson = R"({
  "seed": 3,
  "classes": [
    {"name": "BENIGN", "count": 40, "template_seed": 1},
    {"name": "DOS", "count": 40, "template_seed": 2},
    {"name": "SCAN", "count": 40, "template_seed": 3}
  ]
})";

} // namespace

TEST_CASE("synth, train, detect, eval and inspect chain with exit code 0") {
    TempDir dir;
    std::ofstream(dir.file("spec.json")) << kSpecJson;

    CHECK(run("synth --spec " + dir.file("spec.json") + " --out " + dir.file("flows.bin")) == 0);
    CHECK(run("train --flows " + dir.file("flows.bin") + " --out " + dir.file("model.bundle") +
              " --epochs 4 --vae-epochs 2 --seed 5") == 0);
    CHECK(run("detect --bundle " + dir.file("model.bundle") + " --flows " +
              dir.file("flows.bin") + " --out " + dir.file("verdicts.csv")) == 0);
    CHECK(run("eval --verdicts " + dir.file("verdicts.csv") + " --flows " +
              dir.file("flows.bin") + " --out " + dir.file("report.txt")) == 0);

    const std::string report = slurp(dir.file("report.txt"));
    CHECK(report.find("binary.acc ") != std::string::npos);
    CHECK(report.find("multi.r_unk ") != std::string::npos);
    CHECK(report.find("confusion.raw") != std::string::npos);

    SUBCASE("inspect reports the fitted Weibull parameters") {
        const std::string out = dir.file("inspect.txt");
        CHECK(run("inspect --bundle " + dir.file("model.bundle") + " > " + out) == 0);
        const std::string text = slurp(out);
        const osids::ModelBundle bundle = osids::load_bundle_file(dir.file("model.bundle"));
        for (const auto& cal : bundle.calibrations) {
            char expect[64];
            std::snprintf(expect, sizeof(expect), "kappa=%.9g", cal.rho.shape);
            CHECK(text.find(expect) != std::string::npos);
            std::snprintf(expect, sizeof(expect), "lambda=%.9g", cal.rho.scale);
            CHECK(text.find(expect) != std::string::npos);
        }
        for (const auto& thr : bundle.thresholds) {
            char expect[64];
            std::snprintf(expect, sizeof(expect), "threshold=%.9g", thr.threshold);
            CHECK(text.find(expect) != std::string::npos);
        }
    }

    SUBCASE("identical seeds give byte-identical bundles through the CLI") {
        CHECK(run("train --flows " + dir.file("flows.bin") + " --out " +
                  dir.file("model2.bundle") + " --epochs 4 --vae-epochs 2 --seed 5") == 0);
        CHECK(slurp(dir.file("model.bundle")) == slurp(dir.file("model2.bundle")));
    }
}

TEST_CASE("missing inputs exit with code 2 and name the path") {
    TempDir dir;
    const std::string err = dir.file("err.txt");
    CHECK(run("train --flows /nonexistent/path/flows.bin --out " + dir.file("x.bundle"), err) ==
          2);
    CHECK(slurp(err).find("/nonexistent/path/flows.bin") != std::string::npos);

    CHECK(run("inspect --bundle /nonexistent/model.bundle", err) == 2);
    CHECK(slurp(err).find("/nonexistent/model.bundle") != std::string::npos);
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run("") == 1);                       // no subcommand
    CHECK(run("frobnicate") == 1);             // unknown subcommand
    CHECK(run("train --flows x") == 1);        // missing required --out
    CHECK(run("synth --spec a --out b --difficulty 3") == 1); // out of range
    CHECK(run("--help") == 0);
    CHECK(run("train --help") == 0);
}

TEST_CASE("options load from a config file with flags taking precedence") {
    TempDir dir;
    std::ofstream(dir.file("spec.json")) << kSpecJson;
    REQUIRE(run("synth --spec " + dir.file("spec.json") + " --out " + dir.file("flows.bin")) ==
            0);

    std::ofstream(dir.file("osids.cfg")) << "[train]\nepochs = 2\nvae-epochs = 1\nseed = 9\n";
    CHECK(run("train --config " + dir.file("osids.cfg") + " --flows " + dir.file("flows.bin") +
              " --out " + dir.file("a.bundle")) == 0);

    // the same settings passed as flags give the identical bundle
    CHECK(run("train --flows " + dir.file("flows.bin") + " --out " + dir.file("b.bundle") +
              " --epochs 2 --vae-epochs 1 --seed 9") == 0);
    CHECK(slurp(dir.file("a.bundle")) == slurp(dir.file("b.bundle")));

    // a flag overrides the config value
    CHECK(run("train --config " + dir.file("osids.cfg") + " --flows " + dir.file("flows.bin") +
              " --out " + dir.file("c.bundle") + " --seed 10") == 0);
    CHECK(slurp(dir.file("a.bundle")) != slurp(dir.file("c.bundle")));
}
