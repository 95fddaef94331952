#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
    int status = -1;
    std::string output;
};

/// Runs the CLI with stdout and stderr captured together.
Result run(const std::string& args) {
    const std::string cmd = "MVTRACK_VERBOSITY=1 \"" MVTRACK_CLI_PATH "\" " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string fixture(const char* name) { return std::string(MVTRACK_FIXTURES) + "/" + name; }

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mvtrack_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const char* name) const { return (dir_ / name).string(); }

    void simulate(std::uint64_t seed = 7) {
        const auto r = run("sim --spec " + fixture("small_spec.json") + " --seed " + std::to_string(seed) +
                           " --out-dir " + dir_.string());
        ASSERT_EQ(r.status, 0) << r.output;
    }

    fs::path dir_;
};

} // namespace

TEST_F(CliTest, SelfcheckPassesOnSyntheticRig) {
    simulate();
    const auto a = run("selfcheck --cameras " + path("cameras.json") + " --seed 3");
    EXPECT_EQ(a.status, 0) << a.output;
    EXPECT_NE(a.output.find("PASS"), std::string::npos) << a.output;
    const auto b = run("selfcheck --cameras " + path("cameras.json") + " --seed 3");
    EXPECT_EQ(a.output, b.output);
}

TEST_F(CliTest, SelfcheckRejectsNonOrthonormalRig) {
    const auto r = run("selfcheck --cameras " + fixture("bad_rig.json") + " --seed 1");
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.output.find("CAM_SKEWED"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("orthonormal"), std::string::npos) << r.output;
}

TEST_F(CliTest, SimTrackEvalIsDeterministic) {
    simulate();
    for (const char* mode : {"de", "pr", "pr+r", "pr+h"}) {
        const std::string m(mode);
        for (const char* tag : {"a", "b"}) {
            const std::string t(tag);
            auto r = run("track --detections " + path("detections.jsonl") + " --cameras " + path("cameras.json") +
                         " --mode " + m + " --out " + path(("tracks_" + t + ".jsonl").c_str()));
            ASSERT_EQ(r.status, 0) << r.output;
            r = run("eval --tracks " + path(("tracks_" + t + ".jsonl").c_str()) + " --gt " + path("gt.jsonl") +
                    " --out " + path(("report_" + t + ".json").c_str()));
            ASSERT_EQ(r.status, 0) << r.output;
        }
        EXPECT_EQ(read_file(path("tracks_a.jsonl")), read_file(path("tracks_b.jsonl"))) << m;
        EXPECT_EQ(read_file(path("report_a.json")), read_file(path("report_b.json"))) << m;
        EXPECT_NE(read_file(path("report_a.json")).find("\"mota\""), std::string::npos);
    }
}

TEST_F(CliTest, TrackUsesConfigFile) {
    simulate();
    {
        std::ofstream os(path("cfg.toml"));
        os << "de_min_hits = 1000\n";
    }
    const auto r = run("track --detections " + path("detections.jsonl") + " --config " + path("cfg.toml") +
                       " --mode de --out " + path("tracks.jsonl"));
    ASSERT_EQ(r.status, 0) << r.output;
    std::istringstream lines(read_file(path("tracks.jsonl")));
    std::string line;
    int frames = 0;
    while (std::getline(lines, line)) {
        ++frames;
        EXPECT_NE(line.find("\"detections\":[]"), std::string::npos) << line;
    }
    EXPECT_EQ(frames, 20);
}

TEST_F(CliTest, FailuresExitNonzeroWithoutOutput) {
    simulate();
    struct Case {
        std::string args;
        std::string expect;
    };
    const std::string out = path("out.jsonl");
    const std::vector<Case> cases{
        {"track --detections " + fixture("bad_detections.jsonl") + " --out " + out, "detections[0].box"},
        {"track --detections " + path("detections.jsonl") + " --config " + fixture("bad_config.toml") + " --out " + out,
         "alpha"},
        {"track --detections " + path("detections.jsonl") + " --cameras " + fixture("bad_rig.json") + " --out " + out,
         "CAM_SKEWED"},
        {"track --detections " + path("missing.jsonl") + " --out " + out, "missing.jsonl"},
        {"track --detections " + path("detections.jsonl") + " --mode fast --out " + out, "mode"},
        {"eval --tracks " + path("missing.jsonl") + " --gt " + path("gt.jsonl") + " --out " + out, "missing.jsonl"},
        {"sim --spec " + fixture("small_spec.json") + " --seed 1 --out-dir " + path("nowhere"), "nowhere"},
        {"track --detections " + path("detections.jsonl") + " --out " + path("nowhere/t.jsonl"), "nowhere"},
    };
    for (const auto& c : cases) {
        const auto r = run(c.args);
        EXPECT_NE(r.status, 0) << c.args;
        EXPECT_NE(r.output.find(c.expect), std::string::npos) << c.args << "\n" << r.output;
        EXPECT_FALSE(fs::exists(out)) << c.args;
        EXPECT_FALSE(fs::exists(out + ".tmp")) << c.args;
    }
    EXPECT_FALSE(fs::exists(path("nowhere")));
}

TEST_F(CliTest, BadDetectionErrorNamesLine) {
    const auto r = run("track --detections " + fixture("bad_detections.jsonl") + " --out " + path("t.jsonl"));
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.output.find("line 2"), std::string::npos) << r.output;
}

TEST_F(CliTest, VerbosityZeroIsQuiet) {
    const std::string cmd = "MVTRACK_VERBOSITY=0 \"" MVTRACK_CLI_PATH "\" sim --spec " + fixture("small_spec.json") +
                            " --seed 1 --out-dir " + dir_.string() + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    ASSERT_NE(pipe, nullptr);
    std::array<char, 256> buf{};
    const std::size_t n = fread(buf.data(), 1, buf.size(), pipe);
    EXPECT_EQ(pclose(pipe), 0);
    EXPECT_EQ(n, 0u);
}
