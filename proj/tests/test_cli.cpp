#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "bsa_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(BSA_CLI) + " " + args + " > " + (kDir / "stdout.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path writeConfig(const std::string& name, const std::string& text) {
  fs::create_directories(kDir);
  const fs::path path = kDir / name;
  std::ofstream(path) << text;
  return path;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
};

}  // namespace

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("run --config /nonexistent.ini"), 2);
  EXPECT_EQ(run("template sim9"), 2);
  EXPECT_EQ(run("show /nonexistent/summary.json"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, ConfigErrorsExitWithTwo) {
  const fs::path bad = writeConfig("bad.ini", "schema_version = 1\nexperiment = sim1-bsa\n[pendulum]\nm1 = -2\n");
  EXPECT_EQ(run("run --config " + bad.string()), 2);
  const fs::path unknown = writeConfig("unknown.ini", "schema_version = 1\nexperiment = sim1-bsa\nspeed = 3\n");
  EXPECT_EQ(run("run --config " + unknown.string()), 2);
  const fs::path good = writeConfig("good.ini", "schema_version = 1\nexperiment = sim1-bsa\n");
  EXPECT_EQ(run("run --config " + good.string() + " --solver nope"), 2);
  EXPECT_EQ(run("run --config " + good.string() + " --threads 0"), 2);
  EXPECT_EQ(run("sweep --config " + good.string()), 2);
}

TEST_F(Cli, SolverFailureExitsWithThree) {
  const fs::path cfg = writeConfig("starved.ini",
                                   "schema_version = 1\nexperiment = sim1-bsa\n[ocp]\nstarts = 1\n"
                                   "[solver]\nmax_iterations = 2\n");
  EXPECT_EQ(run("run --config " + cfg.string() + " --out " + (kDir / "starved").string()), 3);
  EXPECT_TRUE(fs::exists(kDir / "starved" / "summary.json"));
}

TEST_F(Cli, RunWritesUnderOutputRootAndShowReadsIt) {
  const fs::path cfg = writeConfig("sim1.ini", "schema_version = 1\nexperiment = sim1-bsa\n");
  const fs::path root = kDir / "root";
  EXPECT_EQ(run("run --config " + cfg.string() + " --seed 3"), 0) << "default output root";
  fs::remove_all("results");
  const std::string env = "BSA_OUTPUT_ROOT=" + root.string() + " ";
  const int status = std::system((env + BSA_CLI + " run --config " + cfg.string() + " > /dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(status), 0);
  const fs::path out = root / "sim1-bsa";
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  EXPECT_TRUE(fs::exists(out / "config.ini"));
  EXPECT_EQ(run("show " + out.string()), 0);
  // The effective config written next to the artifacts runs as is.
  EXPECT_EQ(run("run --config " + (out / "config.ini").string() + " --out " + (kDir / "again").string()), 0);
}

TEST_F(Cli, TemplateAndVerify) {
  EXPECT_EQ(run("template sim3-friction"), 0);
  EXPECT_EQ(run("verify --quick --out " + (kDir / "verify").string()), 0);
  EXPECT_TRUE(fs::exists(kDir / "verify" / "verify.json"));
}
