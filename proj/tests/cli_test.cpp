// End-to-end checks of the atlas_cli binary: exit codes, file layout and
// reproducibility.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("atlas_cli_test_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Runs the CLI with stdout/stderr captured; returns the exit status.
  int run(const std::string& args) {
    const std::string cmd = std::string(ATLAS_CLI_PATH) + " " + args + " > " +
                            (dir_ / "stdout.txt").string() + " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out(const std::string& sub) const { return "--out " + (dir_ / sub).string(); }
  std::string read(const fs::path& rel) const {
    std::ifstream in(dir_ / rel, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  std::vector<std::string> lines(const fs::path& rel) const {
    std::istringstream in(read(rel));
    std::vector<std::string> v;
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
  }

  fs::path dir_;
};

TEST_F(Cli, SampleQaWritesOneRowPerDraw) {
  ASSERT_EQ(run("sample --law Qa --a 1 --gamma 0.5 --m 5 --n-draws 1000 --seed 7 " + out("r")), 0);
  const auto rows = lines("r/draws.csv");
  ASSERT_EQ(rows.size(), 1001u);
  EXPECT_EQ(rows[0], "x1,x2,x3,x4,x5");
  const std::string manifest = read("r/manifest.json");
  for (const char* key : {"\"schema\"", "\"version\"", "\"config\"", "\"seed\": 7", "\"started_utc\""}) {
    EXPECT_NE(manifest.find(key), std::string::npos) << key;
  }
}

TEST_F(Cli, SameSeedGivesByteIdenticalCsv) {
  const std::string args = "sample --law Qa --a 1 --gamma 0.5 --m 5 --n-draws 500 --seed 7 ";
  ASSERT_EQ(run(args + out("a")), 0);
  ASSERT_EQ(run(args + out("b")), 0);
  EXPECT_EQ(read("a/draws.csv"), read("b/draws.csv"));
  ASSERT_EQ(run("sample --law Qa --m 5 --n-draws 500 --seed 8 " + out("c")), 0);
  EXPECT_NE(read("a/draws.csv"), read("c/draws.csv"));
}

TEST_F(Cli, ManifestReplaysTheRun) {
  ASSERT_EQ(run("simulate --n 6 --steps 20 --gamma 0.3 --seed 4 " + out("a")), 0);
  ASSERT_EQ(run("simulate --config " + (dir_ / "a/manifest.json").string() + " " + out("b")), 0);
  EXPECT_EQ(read("a/trajectory.csv"), read("b/trajectory.csv"));
}

TEST_F(Cli, PiWithZeroGammaIsUsageError) {
  EXPECT_EQ(run("sample --law pi --gamma 0 " + out("r")), 2);
  EXPECT_NE(read("stderr.txt").find("pi requires gamma > 0"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "r/draws.csv"));
}

TEST_F(Cli, InvalidParamsNameTheConstraint) {
  EXPECT_EQ(run("sample --law Qa --a 0.4 --gamma -0.25 " + out("r")), 2);
  EXPECT_NE(read("stderr.txt").find("2*gamma_-"), std::string::npos);
  EXPECT_EQ(run("sample --law Qa --bogus-flag 1 " + out("r")), 2);
}

TEST_F(Cli, ZeroStepsGiveSingleTimeCsv) {
  ASSERT_EQ(run("simulate --n 7 --steps 0 " + out("r")), 0);
  const auto rows = lines("r/trajectory.csv");
  ASSERT_EQ(rows.size(), 8u);
  for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_EQ(rows[k].rfind("0,", 0), 0u) << rows[k];
}

TEST_F(Cli, SchemeAndBetaValidation) {
  EXPECT_EQ(run("simulate --n 4 --steps 10 --scheme mollified --beta 50 " + out("a")), 0);
  EXPECT_EQ(run("simulate --n 4 --steps 10 --scheme mollified --beta -1 " + out("b")), 2);
  EXPECT_EQ(run("simulate --n 4 --steps 10 --scheme smooth " + out("c")), 2);
}

TEST_F(Cli, ShiftTogglesCompensationColumn) {
  ASSERT_EQ(run("simulate --n 4 --steps 10 --shift on " + out("on")), 0);
  ASSERT_EQ(run("simulate --n 4 --steps 10 --shift off " + out("off")), 0);
  EXPECT_EQ(lines("on/trajectory.csv")[0], "t,rank,position,compensation");
  EXPECT_EQ(lines("off/trajectory.csv")[0], "t,rank,position");
  const std::string report = read("on/report.json");
  EXPECT_NE(report.find("\"truncation\""), std::string::npos);
}

TEST_F(Cli, RefusesToOverwriteWithoutForce) {
  ASSERT_EQ(run("sample --n-draws 5 " + out("r")), 0);
  const std::string before = read("r/draws.csv");
  EXPECT_EQ(run("sample --n-draws 5 --seed 9 " + out("r")), 2);
  EXPECT_EQ(read("r/draws.csv"), before);
  EXPECT_EQ(run("sample --n-draws 5 --seed 9 --force " + out("r")), 0);
  EXPECT_NE(read("r/draws.csv"), before);
}

TEST_F(Cli, ConfigPrecedenceFlagsOverFileOverDefaults) {
  std::ofstream(dir_ / "cfg.json") << R"({"law": "pi_a", "m": 3, "n-draws": 4, "gamma": 0.25})";
  ASSERT_EQ(run("sample --config " + (dir_ / "cfg.json").string() + " --m 2 " + out("r")), 0);
  const auto rows = lines("r/draws.csv");
  ASSERT_EQ(rows.size(), 5u);         // n-draws from the file
  EXPECT_EQ(rows[0], "z1,z2");        // m from the flag, law from the file
  const std::string manifest = read("r/manifest.json");
  EXPECT_NE(manifest.find("\"gamma\": 0.25"), std::string::npos);
  EXPECT_NE(manifest.find("\"seed\": 1"), std::string::npos);  // default
  std::ofstream(dir_ / "bad.json") << R"({"no-such-flag": 1})";
  EXPECT_EQ(run("sample --config " + (dir_ / "bad.json").string() + " " + out("s")), 2);
}

TEST_F(Cli, VerifyUnknownSuiteIsUsageError) {
  EXPECT_EQ(run("verify --suite nonsense " + out("r")), 2);
}

TEST_F(Cli, VerifySamplerSmokeRunWritesReport) {
  ASSERT_EQ(run("verify --suite sampler --seed 1 --replicas 5000 " + out("r")), 0);
  const std::string report = read("r/report.json");
  for (const char* key : {"\"name\"", "\"estimate\"", "\"target\"", "\"se\"", "\"statistic\"", "\"p\"",
                          "\"verdict\""}) {
    EXPECT_NE(report.find(key), std::string::npos) << key;
  }
  EXPECT_NE(read("stdout.txt").find("overall: pass"), std::string::npos);
}

TEST_F(Cli, DirtyTruncationExitsInconclusive) {
  // Eight particles cannot shield the low ranks over a unit horizon.
  EXPECT_EQ(run("verify --suite stationarity --n 8 --dt 0.01 --replicas 200 " + out("r")), 3);
  EXPECT_NE(read("r/report.json").find("\"inconclusive\""), std::string::npos);
}

TEST_F(Cli, BenchReportsKernelsAndGate) {
  ASSERT_EQ(run("bench --n 1000 --steps 20 " + out("r")), 0);
  const auto rows = lines("r/bench.csv");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "n,dt,scheme,kernel,steps,seconds,steps_per_second,particle_steps_per_second");
  EXPECT_NE(read("r/bench.csv").find(",mollified,incremental,"), std::string::npos);
}

}  // namespace
