#include <cmath>

#include <gtest/gtest.h>

#include "bsa/experiment.hpp"
#include "bsa/friction.hpp"
#include "bsa/simulate.hpp"

using namespace bsa;

namespace {

StickingSet set(std::initializer_list<ClutchId> ids) {
  StickingSet s;
  for (ClutchId id : ids) s.set(index(id));
  return s;
}

ContactState contactWith(std::initializer_list<ClutchId> sticking) {
  ContactState c;
  c.mode = *FrictionMode::fromSticking(set(sticking));
  return c;
}

// Ideal Sim-1 optimum, shared by the friction scenarios below.
const OcpSolution& sim1Solution() {
  static const OcpSolution sol = [] {
    const RunReport r = runExperiment(ExperimentConfig::defaults(ExperimentId::Sim1Bsa));
    return *r.solution;
  }();
  return sol;
}

double frictionSpeed(double m_max, double ramp, double advance) {
  const OcpSolution& sol = sim1Solution();
  const ClutchCommands cmd = ClutchCommands::fromSwitching(sol.switching(), advance, m_max, ramp, ramp);
  const PendulumParams p;
  return simulateFriction(BsaVector::Zero(), sol.inputSignal(), cmd, 0.2, p).finalTcpSpeed();
}

}  // namespace

TEST(FrictionModes, NineAdmissibleCombinations) {
  int count = 0;
  for (unsigned bits = 0; bits < 16; ++bits) {
    const StickingSet s(bits);
    const bool joint1_locked = s.test(index(ClutchId::A)) && s.test(index(ClutchId::B));
    const bool joint2_locked = s.test(index(ClutchId::C)) && s.test(index(ClutchId::D));
    const auto mode = FrictionMode::fromSticking(s);
    EXPECT_EQ(mode.has_value(), !joint1_locked && !joint2_locked) << s;
    if (mode) {
      ++count;
      EXPECT_EQ(FrictionMode::fromIndex(mode->p).sticking, s);
    }
  }
  EXPECT_EQ(count, 9);
}

TEST(FrictionModes, RelativeVelocities) {
  const Vec4 xidot(1.0, 2.0, 3.0, 5.0);
  EXPECT_DOUBLE_EQ(relativeVelocity(ClutchId::A, xidot), 1.0);
  EXPECT_DOUBLE_EQ(relativeVelocity(ClutchId::B, xidot), -2.0);
  EXPECT_DOUBLE_EQ(relativeVelocity(ClutchId::C, xidot), 2.0);
  EXPECT_DOUBLE_EQ(relativeVelocity(ClutchId::D, xidot), -3.0);
  EXPECT_EQ(clutchFromName('c'), ClutchId::C);
  EXPECT_EQ(clutchName(ClutchId::D), 'D');
}

TEST(StaticTorque, UnitInertiaHoldsForcing) {
  const Mat4 I = Mat4::Identity();
  const Vec4 f(1.0, -2.0, 3.0, 0.5);
  // A braking clutch holds its own coordinate.
  const Eigen::VectorXd a = staticTorques(I, {ClutchId::A}, f);
  ASSERT_EQ(a.size(), 1);
  EXPECT_NEAR(a(0), f(0), 1e-14);
  const Eigen::VectorXd ac = staticTorques(I, {ClutchId::A, ClutchId::C}, f);
  EXPECT_NEAR(ac(0), f(0), 1e-14);
  EXPECT_NEAR(ac(1), f(1), 1e-14);
  // A coupling clutch splits the difference between spring and link.
  const Eigen::VectorXd b = staticTorques(I, {ClutchId::B}, f);
  EXPECT_NEAR(b(0), 0.5 * (f(0) - f(2)), 1e-14);
  const Eigen::VectorXd d = staticTorques(I, {ClutchId::D}, f);
  EXPECT_NEAR(d(0), 0.5 * (f(1) - f(3)), 1e-14);
}

TEST(StaticTorque, HeldAccelerationVanishes) {
  const PendulumParams p;
  BsaVector x = BsaVector::Zero();
  x << 0.3, -0.2, 0.1, 0.05, 0.4, -0.3, 0.0, 0.0, 1.0, -0.5;
  x(bsa_index::kPsiDot + 1) = x(bsa_index::kQDot + 1);
  const ContactState c = contactWith({ClutchId::A, ClutchId::D});
  const Vec4 M = Vec4::Constant(1e3);
  const BsaVector xdot = frictionFlowChecked(x, Vec2::Zero(), c, M, p, FrictionParams{});
  const Vec4 xiddot = xdot.segment<4>(bsa_index::kXiDot);
  const double scale = 1e-12 * xiddot.norm();
  EXPECT_NEAR(relativeVelocity(ClutchId::A, xiddot), 0.0, scale);
  EXPECT_NEAR(relativeVelocity(ClutchId::D, xiddot), 0.0, scale);
}

TEST(Coulomb, DynamicTorqueOpposesSlip) {
  EXPECT_EQ(dynamicTorque(2.0, 30.0), -30.0);
  EXPECT_EQ(dynamicTorque(-1e-3, 30.0), 30.0);
  EXPECT_EQ(dynamicTorque(0.0, 30.0), 0.0);
}

TEST(Commands, CapacitiesRampLinearly) {
  ClutchCommands cmd;
  cmd.events[index(ClutchId::A)] = {{0.1, true}, {0.3, false}};
  cmd.t_connect = 0.02;
  cmd.t_separate = 0.04;
  cmd.m_max = 30.0;
  EXPECT_NO_THROW(cmd.validate());
  EXPECT_DOUBLE_EQ(cmd.capacity(ClutchId::A, 0.05), 0.0);
  EXPECT_NEAR(cmd.capacity(ClutchId::A, 0.11), 15.0, 1e-9);
  EXPECT_NEAR(cmd.capacity(ClutchId::A, 0.2), 30.0, 1e-12);
  EXPECT_NEAR(cmd.capacity(ClutchId::A, 0.31), 22.5, 1e-9);
  EXPECT_NEAR(cmd.capacity(ClutchId::A, 0.5), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(cmd.capacity(ClutchId::B, 0.2), 0.0);
  EXPECT_TRUE(cmd.commandedEngaged(ClutchId::A, 0.2));
  EXPECT_FALSE(cmd.commandedEngaged(ClutchId::A, 0.35));
}

TEST(Commands, ZeroRampsStepWithLeftLimits) {
  ClutchCommands cmd;
  cmd.events[index(ClutchId::C)] = {{0.1, true}};
  cmd.t_connect = cmd.t_separate = 0.0;
  EXPECT_DOUBLE_EQ(cmd.capacity(ClutchId::C, 0.1), cmd.m_max);
  EXPECT_DOUBLE_EQ(cmd.capacityBefore(ClutchId::C, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(cmd.capacityBefore(ClutchId::C, 0.2), cmd.m_max);
}

TEST(Commands, RejectBothClutchesOfAJointEngaged) {
  ClutchCommands cmd;
  cmd.initially_engaged = {true, true, false, false};
  EXPECT_THROW(cmd.validate(), std::invalid_argument);
  ClutchCommands unsorted;
  unsorted.events[0] = {{0.2, true}, {0.1, false}};
  EXPECT_THROW(unsorted.validate(), std::invalid_argument);
  ClutchCommands negative;
  negative.m_max = -1.0;
  EXPECT_THROW(negative.validate(), std::invalid_argument);
}

TEST(Commands, MirrorSwitchingSignal) {
  const SwitchingSignal s{{{4, 0.15}, {3, 0.05}}};
  const ClutchCommands cmd = ClutchCommands::fromSwitching(s, 0.01, 30.0, 0.02, 0.02);
  // SEA-DEC: B couples joint 1, C brakes spring 2. DEC-SEA: A and D.
  EXPECT_TRUE(cmd.commandedEngaged(ClutchId::B, 0.0));
  EXPECT_TRUE(cmd.commandedEngaged(ClutchId::C, 0.0));
  EXPECT_FALSE(cmd.commandedEngaged(ClutchId::A, 0.0));
  EXPECT_TRUE(cmd.commandedEngaged(ClutchId::A, 0.141));
  EXPECT_TRUE(cmd.commandedEngaged(ClutchId::D, 0.141));
  EXPECT_FALSE(cmd.commandedEngaged(ClutchId::B, 0.141));
  EXPECT_FALSE(cmd.commandedEngaged(ClutchId::A, 0.139));
}

TEST(Guards, StaticRatioRaisesBreakAway) {
  // Spring 1 deflected by 0.1 rad pulls on its braked inertia with 10 N m.
  const PendulumParams p;
  BsaVector x = BsaVector::Zero();
  x(bsa_index::kTheta) = 0.1;
  const ContactState c = contactWith({ClutchId::A});
  const Vec4 M(8.0, 0.0, 0.0, 0.0);
  FrictionParams fp;
  const auto slip = guardCheck(x, 0.0, c, M, p, fp, 1e-9);
  ASSERT_TRUE(slip.has_value());
  EXPECT_FALSE(slip->to_stick);
  EXPECT_EQ(slip->clutch, ClutchId::A);
  EXPECT_NEAR(std::abs(slip->holding_torque), 10.0, 1e-9);
  fp.static_ratio = 1.5;
  EXPECT_FALSE(guardCheck(x, 0.0, c, M, p, fp, 1e-9).has_value());
}

TEST(Guards, SlippingClutchAtRestSticksWithinCapacity) {
  const PendulumParams p;
  BsaVector x = BsaVector::Zero();
  x(bsa_index::kTheta) = 0.05;
  const ContactState c = contactWith({});
  const auto t = guardCheck(x, 0.0, c, Vec4(30.0, 0.0, 0.0, 0.0), p, FrictionParams{}, 1e-9);
  ASSERT_TRUE(t.has_value());
  EXPECT_TRUE(t->to_stick);
  EXPECT_EQ(t->clutch, ClutchId::A);
}

TEST(FrictionSim, StuckClutchesStayAtRest) {
  const OcpSolution& sol = sim1Solution();
  const ClutchCommands cmd = ClutchCommands::fromSwitching(sol.switching(), 0.01, 30.0, 0.02, 0.02);
  const Trajectory tr = simulateFriction(BsaVector::Zero(), sol.inputSignal(), cmd, 0.2, PendulumParams{});
  ASSERT_FALSE(tr.events.empty());
  for (const auto& s : tr.samples) {
    const FrictionMode m = FrictionMode::fromIndex(s.mode);
    const Vec4 xidot = s.x.segment<4>(bsa_index::kXiDot);
    for (ClutchId id : kClutches) {
      if (m.sticks(id)) EXPECT_LE(std::abs(relativeVelocity(id, xidot)), kStickVelocityTolerance) << s.t;
    }
    EXPECT_GE(s.dissipation, 0.0);
  }
  // Friction only removes energy relative to the ideal replay.
  EXPECT_LT(tr.finalTcpSpeed(), sol.finalTcpSpeed(PendulumParams{}));
  EXPECT_GT(tr.frictionLoss(), 0.0);
}

TEST(FrictionSim, HighCapacityApproachesIdealMonotonically) {
  // Instant clutches without lead time: the slip phase shrinks to the ideal
  // impact as capacity grows.
  const double ideal = sim1Solution().finalTcpSpeed(PendulumParams{});
  double prev = 0.0;
  for (double m : {30.0, 100.0, 1000.0, 1e4}) {
    const double v = frictionSpeed(m, 0.0, 0.0);
    EXPECT_GE(v, prev - 1e-9) << "M_max " << m;
    EXPECT_LE(v, ideal + 1e-6) << "M_max " << m;
    prev = v;
  }
  EXPECT_NEAR(prev, ideal, 1e-3 * ideal);
}
