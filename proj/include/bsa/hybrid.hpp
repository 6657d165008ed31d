#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bsa/dynamics.hpp"

namespace bsa {

// Equations of motion of the ideal BSA pendulum over xi = (psi, q):
//
//   Pi(xi) xiddot + eta(xi, xidot) - tau_k = C_p^T lambda,   C_p xidot = 0,
//
// with tau_k = (K (theta - psi), 0). The spring drives its inertia towards the
// motor angle; the VSA model uses the same sign so both agree in SEA-SEA.

using ConstraintMatrix = Mat<2, 4>;

/// Actuator mode of the two-clutch pendulum. Index p and clutch flags follow
/// the mode table: c_i = 1 connects spring i to its link, c_i = 0 brakes it.
struct BsaMode {
  int p = 2;
  bool c1 = true;
  bool c2 = true;
  ConstraintMatrix C = ConstraintMatrix::Zero();

  static BsaMode fromIndex(int p);
  static BsaMode fromClutches(bool c1, bool c2);
  /// Accepts "dec-dec", "sea-sea", "dec-sea", "sea-dec" (case-insensitive).
  static BsaMode fromName(std::string_view name);
  std::string name() const;
};

/// Mode-table constraint matrix. Throws std::invalid_argument for p outside 1..4.
ConstraintMatrix constraintMatrix(int p);

/// Raised when C Pi^-1 C^T cannot be factored.
class SingularConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Constraint torques lambda = (C Pi^-1 C^T)^-1 C Pi^-1 (eta - tau_k), which make
/// the resulting acceleration satisfy C xiddot = 0. C may have any row count.
Eigen::VectorXd constraintTorque(const Mat4& Pi, const Eigen::MatrixXd& C, const Vec4& tau_k,
                                 const Vec4& eta);

struct ImpactResult {
  Vec4 xidot_plus;
  Eigen::VectorXd impulse;
};

/// Momentum-balance velocity reset onto ker(C):
/// Lambda = -(C Pi^-1 C^T)^-1 C xidot, xidot+ = xidot + Pi^-1 C^T Lambda.
ImpactResult impactMap(const Mat4& Pi, const Eigen::MatrixXd& C, const Vec4& xidot_minus);

namespace detail {

template <typename Scalar>
Mat<4, 4, Scalar> inverseBigInertia(const Vec<2, Scalar>& q, const PendulumParams& p) {
  const Mat<2, 2, Scalar> M = massMatrix(q, p);
  const Scalar det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
  Mat<4, 4, Scalar> inv = Mat<4, 4, Scalar>::Zero();
  inv(0, 0) = Scalar(1.0 / p.Js1);
  inv(1, 1) = Scalar(1.0 / p.Js2);
  inv(2, 2) = M(1, 1) / det;
  inv(3, 3) = M(0, 0) / det;
  inv(2, 3) = -M(0, 1) / det;
  inv(3, 2) = -M(1, 0) / det;
  return inv;
}

template <typename Scalar>
Mat<2, 2, Scalar> inverse2(const Mat<2, 2, Scalar>& S) {
  const Scalar det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  Mat<2, 2, Scalar> inv;
  inv << S(1, 1) / det, -S(0, 1) / det, -S(1, 0) / det, S(0, 0) / det;
  return inv;
}

}  // namespace detail

/// Continuous flow of mode p: xdot = (u_theta, xidot, Pi^-1 (C^T lambda - eta + tau_k)).
/// Does not check the velocity constraint; see bsaFlowChecked.
template <typename Scalar>
Vec<10, Scalar> bsaFlow(const Vec<10, Scalar>& x, const Vec<2, Scalar>& u, const ConstraintMatrix& C,
                        const PendulumParams& p) {
  using namespace bsa_index;
  const Vec<2, Scalar> theta = x.template segment<2>(kTheta);
  const Vec<4, Scalar> xi = x.template segment<4>(kXi);
  const Vec<4, Scalar> xidot = x.template segment<4>(kXiDot);
  const Vec<2, Scalar> q = xi.template tail<2>();

  const Mat<2, 2, Scalar> K = stiffnessMatrix(p).template cast<Scalar>();
  const Vec<4, Scalar> forcing =
      extendedBias(xi, xidot, p) - springTorque<Scalar>(theta, xi.template head<2>(), K);
  const Mat<4, 4, Scalar> Pinv = detail::inverseBigInertia(q, p);
  const Mat<2, 4, Scalar> Cs = C.template cast<Scalar>();
  const Mat<2, 4, Scalar> CPinv = Cs * Pinv;
  const Mat<2, 2, Scalar> S = CPinv * Cs.transpose();
  const Vec<2, Scalar> lambda = detail::inverse2(S) * (CPinv * forcing);

  Vec<10, Scalar> xdot;
  xdot.template segment<2>(kTheta) = u;
  xdot.template segment<4>(kXi) = xidot;
  xdot.template segment<4>(kXiDot) = Pinv * (Cs.transpose() * lambda - forcing);
  return xdot;
}

/// Velocity-reset jump into the mode with constraint matrix C; positions and
/// motor angles are unchanged.
template <typename Scalar>
Vec<10, Scalar> bsaJump(const Vec<10, Scalar>& x, const ConstraintMatrix& C, const PendulumParams& p) {
  using namespace bsa_index;
  const Vec<2, Scalar> q = x.template segment<2>(kQ);
  const Vec<4, Scalar> xidot = x.template segment<4>(kXiDot);
  const Mat<4, 4, Scalar> Pinv = detail::inverseBigInertia(q, p);
  const Mat<2, 4, Scalar> Cs = C.template cast<Scalar>();
  const Mat<4, 2, Scalar> PinvCt = Pinv * Cs.transpose();
  const Mat<2, 2, Scalar> S = Cs * PinvCt;
  const Vec<2, Scalar> impulse = -(detail::inverse2(S) * (Cs * xidot));
  Vec<10, Scalar> out = x;
  out.template segment<4>(kXiDot) = xidot + PinvCt * impulse;
  return out;
}

/// Raised when a state handed to the flow violates its mode's velocity constraint.
class ConstraintViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// bsaFlow with the precondition ||C xidot|| <= tol enforced.
BsaVector bsaFlowChecked(const BsaVector& x, const Vec2& u, const BsaMode& mode, const PendulumParams& p,
                         double tol = 1e-6);

/// Velocity-constraint residual C_p xidot.
Vec2 constraintResidual(const BsaVector& x, const BsaMode& mode);

struct BsaState {
  Vec2 theta = Vec2::Zero();
  Vec4 xi = Vec4::Zero();
  Vec4 xidot = Vec4::Zero();
  BsaMode mode;
  double t = 0.0;

  BsaVector vector() const;
  static BsaState fromVector(const BsaVector& x, const BsaMode& mode, double t);
};

struct JumpResult {
  BsaVector x;
  Vec2 impulse;
};

/// Jump map into `target`, also returning the impulse.
JumpResult jump(const BsaVector& x_minus, const BsaMode& target, const PendulumParams& p);

/// Kinetic energy in the Pi metric, 1/2 xidot^T Pi xidot.
double kineticEnergy(const BsaVector& x, const PendulumParams& p);

struct SwitchingStage {
  int mode = 2;
  double duration = 0.0;
};

/// Ordered modes with their durations. validate() checks nonnegative durations,
/// valid mode indices and, when horizon > 0, that the durations sum to it.
struct SwitchingSignal {
  std::vector<SwitchingStage> stages;

  void validate(double horizon = -1.0, double tol = 1e-9) const;
  double total() const;
  /// Mode active at time t (right-continuous).
  int modeAt(double t) const;
};

}  // namespace bsa
