#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bsa/dynamics.hpp"
#include "bsa/simulate.hpp"
#include "bsa/vsa.hpp"

using namespace bsa;

namespace {

std::mt19937_64 rng(42);

Vec2 randomVec2(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return {d(rng), d(rng)};
}

// Lagrangian oracle: M from the kinetic energy of two point-mass-plus-inertia links.
Mat2 massMatrixFromKinematics(const Vec2& q, const PendulumParams& p) {
  // Center-of-mass Jacobians.
  const double s1 = std::sin(q(0)), c1 = std::cos(q(0));
  const double s12 = std::sin(q(0) + q(1)), c12 = std::cos(q(0) + q(1));
  Mat2 J1, J2;
  J1 << p.lc1 * c1, 0.0, p.lc1 * s1, 0.0;
  J2 << p.l1 * c1 + p.lc2 * c12, p.lc2 * c12, p.l1 * s1 + p.lc2 * s12, p.lc2 * s12;
  Mat2 W1, W2;
  W1 << 1.0, 0.0, 0.0, 0.0;
  W2 << 1.0, 1.0, 1.0, 1.0;
  return p.m1 * J1.transpose() * J1 + p.m2 * J2.transpose() * J2 + p.Jl1 * W1 + p.Jl2 * W2;
}

}  // namespace

TEST(Dynamics, MassMatrixMatchesKinematicOracle) {
  const PendulumParams p;
  for (int n = 0; n < 50; ++n) {
    const Vec2 q = randomVec2(-3.0, 3.0);
    const Mat2 M = massMatrix(q, p);
    EXPECT_LT((M - massMatrixFromKinematics(q, p)).norm(), 1e-12);
    EXPECT_GT(M.determinant(), 0.0);
    EXPECT_GT(M(0, 0), 0.0);
  }
}

TEST(Dynamics, GravityTorqueIsGradientOfPotential) {
  const PendulumParams p;
  for (int n = 0; n < 50; ++n) {
    const Vec2 q = randomVec2(-3.0, 3.0);
    const Vec2 G = gravityTorque(q, p);
    for (int i = 0; i < 2; ++i) {
      Vec2 qp = q, qm = q;
      qp(i) += 1e-6;
      qm(i) -= 1e-6;
      EXPECT_NEAR(G(i), (gravityPotential(qp, p) - gravityPotential(qm, p)) / 2e-6, 1e-6);
    }
  }
  EXPECT_NEAR(gravityPotential(Vec2::Zero(), p), 0.0, 1e-14);
}

TEST(Dynamics, MdotMinusTwoCIsSkew) {
  const PendulumParams p;
  for (int n = 0; n < 50; ++n) {
    const Vec2 q = randomVec2(-3.0, 3.0), qdot = randomVec2(-5.0, 5.0);
    const double h = 1e-6;
    const Mat2 Mdot = (massMatrix<double>(q + h * qdot, p) - massMatrix<double>(q - h * qdot, p)) / (2.0 * h);
    const Mat2 N = Mdot - 2.0 * coriolisMatrix<double>(q, qdot, p);
    EXPECT_LT((N + N.transpose()).norm(), 1e-6);
  }
}

TEST(Dynamics, TcpVelocityIsDerivativeOfPosition) {
  const PendulumParams p;
  for (int n = 0; n < 20; ++n) {
    const Vec2 q = randomVec2(-3.0, 3.0), qdot = randomVec2(-5.0, 5.0);
    const double h = 1e-6;
    const Vec2 fd = (tcpPosition<double>(q + h * qdot, p) - tcpPosition<double>(q - h * qdot, p)) / (2.0 * h);
    EXPECT_LT((fd - tcpVelocity<double>(q, qdot, p)).norm(), 1e-7);
  }
  // Hanging straight down, the end link sits at depth l1 + l2.
  EXPECT_NEAR(tcpPosition<double>(Vec2::Zero(), p)(1), -(p.l1 + p.l2), 1e-14);
}

TEST(Dynamics, UnforcedVsaConservesEnergy) {
  const PendulumParams p;
  VsaVector x;
  x << 0.3, -0.2, 60.0, 40.0, 0.5, -0.4, 1.0, -2.0;
  const double e0 = vsaMechanicalEnergy(x, p);
  const Trajectory tr = simulateVsa(x, InputSignal::constant(Vec4::Zero()), 1.0, p);
  for (const auto& s : tr.samples) EXPECT_NEAR(s.energy.total(), e0, 1e-8 * std::max(1.0, e0));
}

TEST(Dynamics, ParamsRejectNonPhysicalValues) {
  PendulumParams p;
  p.m1 = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = PendulumParams{};
  p.Js2 = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_NO_THROW(PendulumParams{}.validate());
}
