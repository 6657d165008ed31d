#include <gtest/gtest.h>

#include "bsa/config.hpp"

using namespace bsa;

namespace {

const char* kMinimal = "schema_version = 1\nexperiment = sim1-bsa\n";

std::string withLines(const std::string& extra) { return std::string(kMinimal) + extra; }

std::string failingField(const std::string& text) {
  try {
    parseConfig(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalTextGivesExperimentDefaults) {
  const ExperimentConfig c = parseConfig(kMinimal);
  const ExperimentConfig d = ExperimentConfig::defaults(ExperimentId::Sim1Bsa);
  EXPECT_EQ(c.canonical(), d.canonical());
  EXPECT_EQ(c.hash(), d.hash());
}

TEST(Config, EveryTemplateRoundTrips) {
  for (auto id : {ExperimentId::Sim1Bsa, ExperimentId::Sim1Vsa, ExperimentId::Sim2Bsa, ExperimentId::Sim2Vsa,
                  ExperimentId::Sim3Friction, ExperimentId::Sweep}) {
    const ExperimentConfig d = ExperimentConfig::defaults(id);
    EXPECT_EQ(parseConfig(configTemplate(id)).canonical(), d.canonical()) << toString(id);
    EXPECT_EQ(parseConfig(toIni(d, false)).canonical(), d.canonical()) << toString(id);
    EXPECT_EQ(parseExperimentId(toString(id)), id);
  }
}

TEST(Config, OverridesAndRoundTripOfOddValues) {
  const ExperimentConfig c = parseConfig(withLines(
      "seed = 17\n[pendulum]\nm1 = 5.125\nk2 = 0.1\n[ocp]\nmodes = 4, 1, 3\npoints = radau\n[integrator]\ndt = 3e-5\n"));
  EXPECT_EQ(c.seed, 17u);
  EXPECT_DOUBLE_EQ(c.pendulum.m1, 5.125);
  EXPECT_DOUBLE_EQ(c.pendulum.k2, 0.1);
  EXPECT_EQ(c.ocp.modes, (std::vector<int>{4, 1, 3}));
  EXPECT_EQ(c.ocp.points, CollocationPoints::Radau);
  EXPECT_DOUBLE_EQ(c.integrator.dt, 3e-5);
  EXPECT_EQ(parseConfig(toIni(c)).canonical(), c.canonical());
  EXPECT_NE(c.hash(), ExperimentConfig::defaults(ExperimentId::Sim1Bsa).hash());
}

TEST(Config, RejectsUnknownKeysAndSections) {
  EXPECT_EQ(failingField(withLines("[pendulum]\nmass = 3\n")), "pendulum.mass");
  EXPECT_EQ(failingField(withLines("[wheels]\nm = 3\n")), "wheels");
  EXPECT_EQ(failingField(withLines("colour = red\n")), "colour");
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_EQ(failingField(withLines("[pendulum]\nm1 = -5\n")), "pendulum.m1");
  EXPECT_EQ(failingField(withLines("[pendulum]\nm1 = heavy\n")), "pendulum.m1");
  EXPECT_EQ(failingField(withLines("[ocp]\nmodes = 4, 7\n")), "ocp.modes");
  EXPECT_EQ(failingField(withLines("[clutch]\nstatic_ratio = 0.5\n")), "clutch.static_ratio");
  // Duplicates are caught by the INI reader, which names the line.
  EXPECT_EQ(failingField(withLines("[pendulum]\nm1 = 1\nm1 = 2\n")), "<config>:5");
  EXPECT_EQ(failingField("experiment = sim1-bsa\n"), "schema_version");
  EXPECT_EQ(failingField("schema_version = 2\nexperiment = sim1-bsa\n"), "schema_version");
  EXPECT_EQ(failingField("schema_version = 1\nexperiment = sim9\n"), "experiment");
  EXPECT_THROW(loadConfig("/nonexistent/config.ini"), ConfigError);
}

TEST(Config, EmptyKnownSectionIsAccepted) {
  EXPECT_NO_THROW(parseConfig(withLines("[pendulum]\n[ocp]\n")));
}

TEST(Config, ValidateNamesTheKey) {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentId::Sweep);
  c.horizons.clear();
  try {
    c.validate();
    FAIL() << "empty sweep accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "sweep.horizons");
  }
}
