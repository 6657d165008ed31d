#pragma once

#include <cmath>

#include "bsa/params.hpp"
#include "bsa/types.hpp"

namespace bsa {

// Planar two-link chain. q1 is measured from the downward vertical, q2 relative
// to link 1; q = (0, 0) is the hanging equilibrium. Every function is templated
// on the scalar so the same code path serves plain doubles and forward-mode AD.

template <typename Scalar>
Mat<2, 2, Scalar> massMatrix(const Vec<2, Scalar>& q, const PendulumParams& p) {
  using std::cos;
  const Scalar c2 = cos(q(1));
  const double a = p.Jl1 + p.m1 * p.lc1 * p.lc1 + p.Jl2 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2);
  const double b = p.m2 * p.l1 * p.lc2;
  const double d = p.Jl2 + p.m2 * p.lc2 * p.lc2;
  Mat<2, 2, Scalar> M;
  M(0, 0) = Scalar(a) + Scalar(2.0 * b) * c2;
  M(0, 1) = Scalar(d) + Scalar(b) * c2;
  M(1, 0) = M(0, 1);
  M(1, 1) = Scalar(d);
  return M;
}

/// Gradient of the gravity potential with respect to q.
template <typename Scalar>
Vec<2, Scalar> gravityTorque(const Vec<2, Scalar>& q, const PendulumParams& p) {
  using std::sin;
  const Scalar s1 = sin(q(0));
  const Scalar s12 = sin(q(0) + q(1));
  Vec<2, Scalar> G;
  G(0) = Scalar(p.g * (p.m1 * p.lc1 + p.m2 * p.l1)) * s1 + Scalar(p.g * p.m2 * p.lc2) * s12;
  G(1) = Scalar(p.g * p.m2 * p.lc2) * s12;
  return G;
}

/// Coriolis matrix in the Christoffel factorization, so that Mdot - 2C is skew.
template <typename Scalar>
Mat<2, 2, Scalar> coriolisMatrix(const Vec<2, Scalar>& q, const Vec<2, Scalar>& qdot,
                                 const PendulumParams& p) {
  using std::sin;
  const Scalar hc = Scalar(p.m2 * p.l1 * p.lc2) * sin(q(1));
  Mat<2, 2, Scalar> C;
  C(0, 0) = -hc * qdot(1);
  C(0, 1) = -hc * (qdot(0) + qdot(1));
  C(1, 0) = hc * qdot(0);
  C(1, 1) = Scalar(0.0);
  return C;
}

/// Link-side bias h(q, qdot): Coriolis/centrifugal plus gravity.
template <typename Scalar>
Vec<2, Scalar> bias(const Vec<2, Scalar>& q, const Vec<2, Scalar>& qdot, const PendulumParams& p) {
  return coriolisMatrix(q, qdot, p) * qdot + gravityTorque(q, p);
}

template <typename Scalar>
Vec<2, Scalar> tcpPosition(const Vec<2, Scalar>& q, const PendulumParams& p) {
  using std::cos;
  using std::sin;
  Vec<2, Scalar> x;
  x(0) = Scalar(p.l1) * sin(q(0)) + Scalar(p.l2) * sin(q(0) + q(1));
  x(1) = -Scalar(p.l1) * cos(q(0)) - Scalar(p.l2) * cos(q(0) + q(1));
  return x;
}

template <typename Scalar>
Mat<2, 2, Scalar> tcpJacobian(const Vec<2, Scalar>& q, const PendulumParams& p) {
  using std::cos;
  using std::sin;
  const Scalar c1 = cos(q(0)), s1 = sin(q(0));
  const Scalar c12 = cos(q(0) + q(1)), s12 = sin(q(0) + q(1));
  Mat<2, 2, Scalar> J;
  J(0, 0) = Scalar(p.l1) * c1 + Scalar(p.l2) * c12;
  J(0, 1) = Scalar(p.l2) * c12;
  J(1, 0) = Scalar(p.l1) * s1 + Scalar(p.l2) * s12;
  J(1, 1) = Scalar(p.l2) * s12;
  return J;
}

template <typename Scalar>
Vec<2, Scalar> tcpVelocity(const Vec<2, Scalar>& q, const Vec<2, Scalar>& qdot,
                           const PendulumParams& p) {
  return tcpJacobian(q, p) * qdot;
}

/// Squared end-link speed; smooth everywhere, used by the optimizer.
template <typename Scalar>
Scalar tcpSpeedSquared(const Vec<2, Scalar>& q, const Vec<2, Scalar>& qdot,
                       const PendulumParams& p) {
  return tcpVelocity(q, qdot, p).squaredNorm();
}

inline double tcpSpeed(const Vec2& q, const Vec2& qdot, const PendulumParams& p) {
  return tcpVelocity(q, qdot, p).norm();
}

inline Mat2 stiffnessMatrix(const PendulumParams& p) {
  return Vec2(p.k1, p.k2).asDiagonal();
}

/// Spring torque stacked over the extended coordinates: (K (theta - psi), 0, 0).
template <typename Scalar>
Vec<4, Scalar> springTorque(const Vec<2, Scalar>& theta, const Vec<2, Scalar>& psi,
                            const Mat<2, 2, Scalar>& K) {
  Vec<4, Scalar> tau;
  tau.template head<2>() = K * (theta - psi);
  tau.template tail<2>().setZero();
  return tau;
}

/// Pi(xi) = blkdiag(B, M(q)) with B = diag(Js1, Js2).
template <typename Scalar>
Mat<4, 4, Scalar> bigInertia(const Vec<2, Scalar>& q, const PendulumParams& p) {
  Mat<4, 4, Scalar> Pi = Mat<4, 4, Scalar>::Zero();
  Pi(0, 0) = Scalar(p.Js1);
  Pi(1, 1) = Scalar(p.Js2);
  Pi.template bottomRightCorner<2, 2>() = massMatrix(q, p);
  return Pi;
}

/// eta(xi, xidot) = (0, 0, h(q, qdot)).
template <typename Scalar>
Vec<4, Scalar> extendedBias(const Vec<4, Scalar>& xi, const Vec<4, Scalar>& xidot,
                            const PendulumParams& p) {
  Vec<4, Scalar> eta;
  eta.template head<2>().setZero();
  eta.template tail<2>() = bias<Scalar>(xi.template tail<2>(), xidot.template tail<2>(), p);
  return eta;
}

/// Gravity potential, zero at the hanging equilibrium.
double gravityPotential(const Vec2& q, const PendulumParams& p);

struct EnergyBreakdown {
  double kinetic_link = 0.0;
  double kinetic_spring = 0.0;
  double potential_gravity = 0.0;
  Vec2 potential_spring = Vec2::Zero();

  double kinetic() const { return kinetic_link + kinetic_spring; }
  double potential() const { return potential_gravity + potential_spring.sum(); }
  double total() const { return kinetic() + potential(); }
};

/// Energy of the BSA pendulum. Spring inertias contribute kinetic energy.
EnergyBreakdown energy(const Vec2& theta, const Vec4& xi, const Vec4& xidot, const Mat2& K,
                       const PendulumParams& p);

/// Energy of the VSA pendulum: no spring inertia, the spring spans theta - q.
EnergyBreakdown vsaEnergy(const Vec2& theta, const Vec2& k, const Vec2& q, const Vec2& qdot,
                          const PendulumParams& p);

}  // namespace bsa
