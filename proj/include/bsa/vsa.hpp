#pragma once

#include "bsa/dynamics.hpp"

namespace bsa {

/// Admissible VSA ranges.
struct VsaLimits {
  double k_min = 0.0;
  double k_max = 100.0;
  double u_theta_max = 2.0;
  double u_k_max = 650.0;
};

/// VSA pendulum: M(q) qddot + h(q, qdot) = K (theta - q), K = diag(k).
/// xdot = (u_theta, u_k, qdot, M^-1 (K (theta - q) - h)).
template <typename Scalar>
Vec<8, Scalar> vsaFlow(const Vec<8, Scalar>& x, const Vec<4, Scalar>& u, const PendulumParams& p) {
  using namespace vsa_index;
  const Vec<2, Scalar> theta = x.template segment<2>(kTheta);
  const Vec<2, Scalar> k = x.template segment<2>(kStiffness);
  const Vec<2, Scalar> q = x.template segment<2>(kQ);
  const Vec<2, Scalar> qdot = x.template segment<2>(kQDot);

  const Mat<2, 2, Scalar> M = massMatrix(q, p);
  const Vec<2, Scalar> rhs = k.cwiseProduct(theta - q) - bias(q, qdot, p);
  const Scalar det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);

  Vec<8, Scalar> xdot;
  xdot.template segment<2>(kTheta) = u.template head<2>();
  xdot.template segment<2>(kStiffness) = u.template tail<2>();
  xdot.template segment<2>(kQ) = qdot;
  xdot(kQDot) = (M(1, 1) * rhs(0) - M(0, 1) * rhs(1)) / det;
  xdot(kQDot + 1) = (M(0, 0) * rhs(1) - M(1, 0) * rhs(0)) / det;
  return xdot;
}

inline double vsaMechanicalEnergy(const VsaVector& x, const PendulumParams& p) {
  using namespace vsa_index;
  return vsaEnergy(x.segment<2>(kTheta), x.segment<2>(kStiffness), x.segment<2>(kQ), x.segment<2>(kQDot), p)
      .total();
}

}  // namespace bsa
