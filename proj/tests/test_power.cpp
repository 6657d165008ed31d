#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "bsa/power.hpp"
#include "bsa/simulate.hpp"
#include "bsa/verify.hpp"

using namespace bsa;

namespace {

std::vector<PowerSample> record(int n, double t1, const std::function<double(double)>& f) {
  std::vector<PowerSample> out;
  for (int i = 0; i <= n; ++i) {
    PowerSample s;
    s.t = t1 * i / n;
    s.p_in = Vec2(f(s.t), -f(s.t));
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Power, BsaSampleSplitsInputIntoOutputAndSpringRate) {
  const PendulumParams p;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int n = 0; n < 100; ++n) {
    BsaVector x;
    for (int i = 0; i < x.size(); ++i) x(i) = d(rng);
    const Vec2 u(d(rng), d(rng));
    const PowerSample s = bsaPower(0.0, x, u, p);
    for (int j = 0; j < 2; ++j) {
      const double k = j == 0 ? p.k1 : p.k2;
      const double defl = x(bsa_index::kTheta + j) - x(bsa_index::kPsi + j);
      EXPECT_NEAR(s.p_in(j), k * defl * u(j), 1e-12);
      EXPECT_NEAR(s.p_out(j), k * defl * x(bsa_index::kPsiDot + j), 1e-12);
      EXPECT_NEAR(s.p_in(j), s.p_out(j) + s.es_dot(j), 1e-12);
    }
  }
}

TEST(Power, VsaSampleIncludesStiffnessRate) {
  VsaVector x;
  x << 0.4, -0.1, 50.0, 80.0, 0.1, 0.2, 1.0, -1.0;
  Vec4 u(1.5, -0.5, 100.0, -200.0);
  const PowerSample s = vsaPower(0.0, x, u);
  // theta - q = (0.3, -0.3)
  EXPECT_NEAR(s.p_in(0), 50.0 * 0.3 * 1.5 + 0.5 * 100.0 * 0.09, 1e-12);
  EXPECT_NEAR(s.p_in(1), 80.0 * -0.3 * -0.5 + 0.5 * -200.0 * 0.09, 1e-12);
  EXPECT_NEAR(s.p_out(0), 50.0 * 0.3 * 1.0, 1e-12);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(s.p_in(j), s.p_out(j) + s.es_dot(j), 1e-12);
}

TEST(Power, WorkSplitsSignsOfSine) {
  const auto rec = record(20000, 1.0, [](double t) { return std::sin(2.0 * std::numbers::pi * t); });
  const WorkSummary w = workSummary(rec, rec);
  EXPECT_NEAR(w.positive(0), 1.0 / std::numbers::pi, 1e-6);
  EXPECT_NEAR(w.negative(0), -1.0 / std::numbers::pi, 1e-6);
  EXPECT_NEAR(w.positive(1), 1.0 / std::numbers::pi, 1e-6);
  EXPECT_NEAR(w.netTotal(), 0.0, 1e-9);
}

TEST(Power, WorkUsesLeftLimitsAtDiscontinuities) {
  // Step from +1 to -1 at t = 0.5, sampled on both sides of the jump.
  std::vector<PowerSample> right, left;
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    PowerSample r, l;
    r.t = l.t = t;
    r.p_in = Vec2::Constant(t < 0.5 ? 1.0 : -1.0);
    l.p_in = Vec2::Constant(t <= 0.5 ? 1.0 : -1.0);
    right.push_back(r);
    left.push_back(l);
  }
  const WorkSummary w = workSummary(right, left);
  EXPECT_DOUBLE_EQ(w.positive(0), 0.5);
  EXPECT_DOUBLE_EQ(w.negative(0), -0.5);
  EXPECT_THROW(workSummary({}, {}), std::invalid_argument);
}

TEST(Power, BrakedMotorWithZeroInputDrawsNoPower) {
  const PendulumParams p;
  const Trajectory tr = simulateBsa(BsaVector::Zero(), InputSignal::constant(Vec2(0.0, 1.0)),
                                    SwitchingSignal{{{4, 0.1}, {3, 0.1}}}, p);
  for (const auto& s : tr.samples) {
    EXPECT_EQ(s.power.p_in(0), 0.0);
    EXPECT_EQ(s.power_left.p_in(0), 0.0);
  }
}

TEST(Power, EnergyBalanceAndAuditProperties) {
  const PendulumParams p;
  const PropertyResult balance = checkPowerBalance(p, 9);
  EXPECT_TRUE(balance.passed) << balance.detail;
  const PropertyResult audit = checkEnergyAudit(p, 9);
  EXPECT_TRUE(audit.passed) << audit.detail;
}

TEST(Power, ModeFlowWorkEqualsEnergyChange) {
  // Within one mode there are no impulses, so the motors' work is the
  // whole change of mechanical energy.
  const PendulumParams p;
  const InputSignal u({0.0, 0.1, 0.2}, {Vec2(1.0, -2.0), Vec2(-1.5, 0.5), Vec2(0.3, 0.3)});
  for (int mode : {1, 2, 3, 4}) {
    const Trajectory tr = simulateBsa(BsaVector::Zero(), u, SwitchingSignal{{{mode, 0.3}}}, p);
    const double dE = tr.back().energy.total() - tr.samples.front().energy.total();
    EXPECT_NEAR(tr.work().netTotal(), dE, 1e-5 * std::max(1.0, std::abs(dE))) << "mode " << mode;
  }
}
