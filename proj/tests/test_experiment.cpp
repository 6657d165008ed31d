#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "bsa/experiment.hpp"
#include "bsa/report.hpp"

using namespace bsa;
namespace fs = std::filesystem;

namespace {

Trajectory syntheticPotential(const std::function<double(double)>& e, double horizon, int n = 2000) {
  Trajectory tr;
  for (int i = 0; i <= n; ++i) {
    TrajectorySample s;
    s.t = horizon * i / n;
    s.energy.potential_gravity = e(s.t);
    tr.samples.push_back(s);
  }
  return tr;
}

fs::path scratchDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bsa_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string readFile(const fs::path& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST(Metrics, ExchangeCyclesCountFullOscillations) {
  const double pi = std::numbers::pi;
  EXPECT_EQ(exchangeCycles(syntheticPotential([&](double t) { return 1.0 - std::cos(2 * pi * 3 * t); }, 1.0)), 3);
  // Monotone growth is no exchange.
  EXPECT_EQ(exchangeCycles(syntheticPotential([](double t) { return t * t; }, 1.0)), 0);
  // Ripple below the hysteresis band does not count.
  EXPECT_EQ(exchangeCycles(syntheticPotential(
                [&](double t) { return 10.0 * t + 0.05 * std::sin(2 * pi * 40 * t); }, 1.0)),
            0);
  EXPECT_EQ(exchangeCycles(Trajectory{}), 0);
}

TEST(Metrics, PotentialPeakTimeAndValue) {
  const EnergyPeak peak = potentialPeak(syntheticPotential([](double t) { return 1.0 - (t - 0.3) * (t - 0.3); }, 1.0));
  EXPECT_NEAR(peak.time, 0.3, 1e-3);
  EXPECT_NEAR(peak.value, 1.0, 1e-6);
}

TEST(Experiment, Sim1SolutionResimulatesAndWritesArtifacts) {
  const fs::path dir = scratchDir("sim1");
  const ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentId::Sim1Bsa);
  const RunReport r = runExperiment(cfg, {dir, 1});
  ASSERT_TRUE(r.success) << r.message;
  ASSERT_TRUE(r.solution.has_value());
  EXPECT_LE(r.resimulation.relative_speed_deviation, 0.02);
  EXPECT_NEAR(r.final_speed, r.predicted_speed, 0.02 * r.predicted_speed);
  EXPECT_EQ(r.modes, (std::vector<int>{4, 3}));
  double total = 0.0;
  for (double d : r.durations) total += d;
  EXPECT_NEAR(total, cfg.horizon, 1e-9);

  EXPECT_EQ(checkCsv(dir / "trajectory.csv", trajectoryColumns(ModelKind::Bsa)), "");
  EXPECT_EQ(checkCsv(dir / "power.csv", powerColumns()), "");
  EXPECT_EQ(checkCsv(dir / "energy.csv", energyColumns()), "");
  EXPECT_EQ(checkCsv(dir / "sketch.csv", sketchColumns()), "");
  EXPECT_EQ(checkCsv(dir / "inputs.csv", inputColumns(OcpModel::Bsa)), "");
  for (const char* f : {"summary.json", "solution.json", "events.csv", "v_tcp.svg", "energy.svg", "power.svg",
                        "sketch.svg"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto summary = nlohmann::json::parse(readFile(dir / "summary.json"));
  EXPECT_EQ(summary["schema_version"], 1);
  EXPECT_EQ(summary["config_hash"], cfg.hash());
  EXPECT_FALSE(formatSummary(summary).empty());
}

TEST(Experiment, SameConfigAndSeedReproduceSummary) {
  ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentId::Sim1Bsa);
  cfg.seed = 5;
  const auto a = toJson(runExperiment(cfg, {{}, 1}), false);
  const auto b = toJson(runExperiment(cfg, {{}, 2}), false);
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_FALSE(a.contains("timing"));
}

TEST(Experiment, SweepConfigIsRejectedBySingleRun) {
  EXPECT_THROW(runExperiment(ExperimentConfig::defaults(ExperimentId::Sweep)), ConfigError);
}

TEST(Report, CsvCheckerFindsSchemaErrors) {
  const fs::path dir = scratchDir("csv");
  fs::create_directories(dir);
  std::ofstream(dir / "ok.csv") << "t,a\n0,1\n0.5,2e-3\n";
  std::ofstream(dir / "header.csv") << "t,b\n0,1\n";
  std::ofstream(dir / "short.csv") << "t,a\n0\n";
  std::ofstream(dir / "text.csv") << "t,a\n0,x\n";
  EXPECT_EQ(checkCsv(dir / "ok.csv", {"t", "a"}), "");
  EXPECT_NE(checkCsv(dir / "header.csv", {"t", "a"}), "");
  EXPECT_NE(checkCsv(dir / "short.csv", {"t", "a"}), "");
  EXPECT_NE(checkCsv(dir / "text.csv", {"t", "a"}), "");
  EXPECT_NE(checkCsv(dir / "missing.csv", {"t", "a"}), "");
}

TEST(Report, PowerCsvHeader) {
  EXPECT_EQ(powerColumns(), (std::vector<std::string>{"t", "P_out_1", "P_out_2", "Es_dot_1", "Es_dot_2", "P_in_1",
                                                      "P_in_2"}));
}

TEST(Ocp, MotorsOfJointsDecoupledToTheEndAreIdle) {
  ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentId::Sim1Bsa);
  cfg.ocp.modes = {4, 3};
  const StagedOcp ocp = buildOcp(cfg, OcpModel::Bsa, OcpCost::MaxTcpVelocity, cfg.horizon);
  // SEA-DEC then DEC-SEA: joint 2 is braked first but couples later.
  EXPECT_FALSE(ocp.idleMotor(0, 0));
  EXPECT_FALSE(ocp.idleMotor(0, 1));
  EXPECT_TRUE(ocp.idleMotor(1, 0));
  EXPECT_FALSE(ocp.idleMotor(1, 1));
  const StagedOcp vsa = buildOcp(cfg, OcpModel::Vsa, OcpCost::MaxTcpVelocity, cfg.horizon);
  EXPECT_FALSE(vsa.idleMotor(0, 0));
}

TEST(Experiment, BrakedMotorDrawsNoPowerAfterItsSwitch) {
  const RunReport r = runExperiment(ExperimentConfig::defaults(ExperimentId::Sim1Bsa));
  ASSERT_TRUE(r.success);
  for (const auto& s : r.trajectory.samples) {
    if (s.t > r.durations.front()) EXPECT_NEAR(s.power_left.p_in(0), 0.0, 1e-12);
    if (s.t >= r.durations.front()) EXPECT_NEAR(s.power.p_in(0), 0.0, 1e-12);
  }
}
