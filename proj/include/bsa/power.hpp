#pragma once

#include <vector>

#include "bsa/types.hpp"
#include "bsa/params.hpp"

namespace bsa {

/// Per-joint power flow at one instant. p_in = p_out + es_dot by construction.
struct PowerSample {
  double t = 0.0;
  Vec2 p_out = Vec2::Zero();
  Vec2 es_dot = Vec2::Zero();
  Vec2 p_in = Vec2::Zero();
};

struct WorkSummary {
  Vec2 positive = Vec2::Zero();
  Vec2 negative = Vec2::Zero();

  Vec2 net() const { return positive + negative; }
  double netTotal() const { return net().sum(); }
  double positiveTotal() const { return positive.sum(); }
  double negativeTotal() const { return negative.sum(); }
};

/// Power delivered through a spring to the body it drives.
inline double powerOut(double spring_torque, double output_velocity) {
  return spring_torque * output_velocity;
}

/// BSA: k (theta - psi) (thetadot - psidot).
inline double springEnergyRateBsa(double theta, double psi, double thetadot, double psidot, double k) {
  return k * (theta - psi) * (thetadot - psidot);
}

/// VSA: 1/2 kdot (theta - q)^2 + k (theta - q) (thetadot - qdot).
inline double springEnergyRateVsa(double theta, double q, double thetadot, double qdot, double k,
                                  double kdot) {
  const double d = theta - q;
  return 0.5 * kdot * d * d + k * d * (thetadot - qdot);
}

/// Power sample of the BSA pendulum. The spring output is the spring inertia,
/// so p_out uses psidot (equal to qdot while the joint is coupled).
PowerSample bsaPower(double t, const BsaVector& x, const Vec2& u_theta, const PendulumParams& p);

PowerSample vsaPower(double t, const VsaVector& x, const Vec<4>& u);

/// Trapezoidal positive/negative work of p_in per actuator. `left` holds the
/// left limits at each sample (equal to `right` away from discontinuities);
/// segment [t_i, t_{i+1}] integrates right[i] and left[i+1].
/// Throws std::invalid_argument for an empty record.
WorkSummary workSummary(const std::vector<PowerSample>& right, const std::vector<PowerSample>& left);

}  // namespace bsa
