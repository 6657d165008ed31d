#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bsa/hybrid.hpp"
#include "bsa/simulate.hpp"
#include "bsa/verify.hpp"

using namespace bsa;

namespace {

std::mt19937_64 rng(7);

double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

BsaVector randomState() {
  BsaVector x;
  for (int i = 0; i < x.size(); ++i) x(i) = uniform(-2.0, 2.0);
  return x;
}

// Rows of the mode table: DEC fixes the spring (psidot = 0), SEA ties it to
// the link (psidot = qdot).
ConstraintMatrix tableRow(bool sea1, bool sea2) {
  ConstraintMatrix C = ConstraintMatrix::Zero();
  C(0, 0) = 1.0;
  if (sea1) C(0, 2) = -1.0;
  C(1, 1) = 1.0;
  if (sea2) C(1, 3) = -1.0;
  return C;
}

}  // namespace

TEST(ModeTable, ConstraintMatricesMatchTable) {
  EXPECT_EQ(constraintMatrix(1), tableRow(false, false));
  EXPECT_EQ(constraintMatrix(2), tableRow(true, true));
  EXPECT_EQ(constraintMatrix(3), tableRow(false, true));
  EXPECT_EQ(constraintMatrix(4), tableRow(true, false));
  EXPECT_THROW(constraintMatrix(0), std::invalid_argument);
  EXPECT_THROW(constraintMatrix(5), std::invalid_argument);
}

TEST(ModeTable, NamesAndClutchFlagsRoundTrip) {
  for (int p = 1; p <= 4; ++p) {
    const BsaMode m = BsaMode::fromIndex(p);
    EXPECT_EQ(BsaMode::fromName(m.name()).p, p);
    EXPECT_EQ(BsaMode::fromClutches(m.c1, m.c2).p, p);
  }
  EXPECT_EQ(BsaMode::fromName("DEC-SEA").p, 3);
  EXPECT_THROW(BsaMode::fromName("sea"), std::invalid_argument);
}

TEST(Flow, AccelerationKeepsConstraint) {
  const PendulumParams p;
  for (int n = 0; n < 200; ++n) {
    const BsaMode mode = BsaMode::fromIndex(1 + n % 4);
    const BsaVector x = jump(randomState(), mode, p).x;
    const Vec2 u(uniform(-2, 2), uniform(-2, 2));
    const BsaVector xdot = bsaFlowChecked(x, u, mode, p);
    EXPECT_LT((mode.C * xdot.segment<4>(bsa_index::kXiDot)).norm(), 1e-9);
    EXPECT_EQ(xdot.segment<2>(bsa_index::kTheta), u);
  }
}

TEST(Flow, RejectsStateOffConstraint) {
  const PendulumParams p;
  BsaVector x = BsaVector::Zero();
  x(bsa_index::kPsiDot) = 1.0;
  EXPECT_THROW(bsaFlowChecked(x, Vec2::Zero(), BsaMode::fromIndex(1), p), ConstraintViolation);
}

TEST(Flow, SeaSeaMovesSpringInertiaWithLinks) {
  // In SEA-SEA the springs move with the links, so the links see an extra
  // inertia diag(Js) and the spring torque K (theta - psi).
  const PendulumParams p;
  const BsaMode mode = BsaMode::fromIndex(2);
  for (int n = 0; n < 20; ++n) {
    const BsaVector x = jump(randomState(), mode, p).x;
    const BsaVector xdot = bsaFlow<double>(x, Vec2::Zero(), mode.C, p);
    const Vec2 q = x.segment<2>(bsa_index::kQ), qdot = x.segment<2>(bsa_index::kQDot);
    const Mat2 M = massMatrix(q, p) + Vec2(p.Js1, p.Js2).asDiagonal().toDenseMatrix();
    const Vec2 tau = stiffnessMatrix(p) * (x.segment<2>(bsa_index::kTheta) - x.segment<2>(bsa_index::kPsi));
    const Vec2 qddot = M.ldlt().solve(tau - bias(q, qdot, p));
    EXPECT_LT((xdot.segment<2>(bsa_index::kQDot) - qddot).norm(), 1e-9);
  }
}

TEST(Impact, ProjectsOntoConstraintWithoutEnergyGain) {
  const PendulumParams p;
  for (int n = 0; n < 500; ++n) {
    const BsaMode mode = BsaMode::fromIndex(1 + n % 4);
    const BsaVector x = randomState();
    const JumpResult j = jump(x, mode, p);
    EXPECT_LT(constraintResidual(j.x, mode).norm(), 1e-12);
    EXPECT_LE(kineticEnergy(j.x, p), kineticEnergy(x, p) + 1e-12);
    EXPECT_LT((jump(j.x, mode, p).x - j.x).norm(), 1e-12);
    // Positions and motor angles are untouched.
    EXPECT_EQ(j.x.head<6>(), x.head<6>());
  }
}

TEST(Impact, ConservesMomentumOutsideConstraintSpace) {
  // Pi (xidot+ - xidot-) = C^T Lambda lies in the row space of C.
  const PendulumParams p;
  for (int n = 0; n < 100; ++n) {
    const BsaMode mode = BsaMode::fromIndex(1 + n % 4);
    const BsaVector x = randomState();
    const JumpResult j = jump(x, mode, p);
    const Mat4 Pi = bigInertia<double>(x.segment<2>(bsa_index::kQ), p);
    const Vec4 dp = Pi * (j.x - x).segment<4>(bsa_index::kXiDot);
    EXPECT_LT((dp - mode.C.transpose() * j.impulse).norm(), 1e-10);
  }
}

TEST(Impact, PropertySuiteAndCorruptedConstraintDetection) {
  const PropertyResult good = checkImpactProjection(10000, 3);
  EXPECT_TRUE(good.passed) << good.detail;
  EXPECT_LE(good.value, 1e-10);
  const PropertyResult bad = checkImpactProjection(1000, 3, true);
  EXPECT_FALSE(bad.passed) << bad.detail;
}

TEST(Switching, ValidatesSchedules) {
  SwitchingSignal s{{{4, 0.15}, {3, 0.05}}};
  EXPECT_NO_THROW(s.validate(0.2));
  EXPECT_THROW(s.validate(0.3), std::invalid_argument);
  EXPECT_EQ(s.modeAt(0.0), 4);
  EXPECT_EQ(s.modeAt(0.15), 3);
  EXPECT_THROW((SwitchingSignal{{{5, 0.2}}}.validate()), std::invalid_argument);
  EXPECT_THROW((SwitchingSignal{{{2, -0.1}}}.validate()), std::invalid_argument);
}

TEST(Simulate, HybridRunStaysOnConstraintAndRecordsSwitches) {
  const PendulumParams p;
  const SwitchingSignal s{{{4, 0.1}, {1, 0.05}, {3, 0.1}}};
  const Trajectory tr = simulateBsa(BsaVector::Zero(), InputSignal::constant(Vec2(2.0, -1.5)), s, p);
  int switches = 0;
  for (const auto& e : tr.events) switches += e.kind == EventKind::ScheduledSwitch || e.kind == EventKind::Impulse;
  EXPECT_GE(switches, 2);
  for (const auto& smp : tr.samples) {
    EXPECT_LT(constraintResidual(smp.x, BsaMode::fromIndex(smp.mode)).norm(), 1e-6);
  }
  EXPECT_NEAR(tr.back().t, 0.25, 1e-12);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) EXPECT_GT(tr.samples[i].t, tr.samples[i - 1].t);
}

TEST(Simulate, NearlyMasslessSpringsReproduceVsa) {
  const PropertyResult r = checkModelEquivalence(PendulumParams{}, 20, 11);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Simulate, LightSpringsStayOnConstraintForOneSecond) {
  PendulumParams p;
  p.Js1 = p.Js2 = 1e-9;
  BsaVector x;
  x << 0.2, -0.1, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 1.0, -1.0;
  const Trajectory tr = simulateBsa(x, InputSignal::constant(Vec2(1.0, -1.0)), SwitchingSignal{{{2, 1.0}}}, p);
  for (const auto& s : tr.samples) EXPECT_LE(constraintResidual(s.x, BsaMode::fromIndex(2)).norm(), 1e-6);
}
