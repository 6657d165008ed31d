#include "bsa/dynamics.hpp"

namespace bsa {

double gravityPotential(const Vec2& q, const PendulumParams& p) {
  const double h1 = p.lc1 * (1.0 - std::cos(q(0)));
  const double h2 = p.l1 * (1.0 - std::cos(q(0))) + p.lc2 * (1.0 - std::cos(q(0) + q(1)));
  return p.g * (p.m1 * h1 + p.m2 * h2);
}

EnergyBreakdown energy(const Vec2& theta, const Vec4& xi, const Vec4& xidot, const Mat2& K,
                       const PendulumParams& p) {
  const Vec2 psi = xi.head<2>();
  const Vec2 q = xi.tail<2>();
  const Vec2 psidot = xidot.head<2>();
  const Vec2 qdot = xidot.tail<2>();
  const Vec2 deflection = theta - psi;

  EnergyBreakdown e;
  e.kinetic_link = 0.5 * qdot.dot(massMatrix(q, p) * qdot);
  e.kinetic_spring = 0.5 * (p.Js1 * psidot(0) * psidot(0) + p.Js2 * psidot(1) * psidot(1));
  e.potential_gravity = gravityPotential(q, p);
  e.potential_spring = 0.5 * K.diagonal().cwiseProduct(deflection.cwiseAbs2());
  return e;
}

EnergyBreakdown vsaEnergy(const Vec2& theta, const Vec2& k, const Vec2& q, const Vec2& qdot,
                          const PendulumParams& p) {
  EnergyBreakdown e;
  e.kinetic_link = 0.5 * qdot.dot(massMatrix(q, p) * qdot);
  e.potential_gravity = gravityPotential(q, p);
  e.potential_spring = 0.5 * k.cwiseProduct((theta - q).cwiseAbs2());
  return e;
}

}  // namespace bsa
