#pragma once

#include <array>
#include <bitset>
#include <optional>
#include <string>
#include <vector>

#include "bsa/hybrid.hpp"

namespace bsa {

// Four friction clutches realize the two switch-and-hold mechanisms:
//   A brakes spring 1      g_A = psidot1
//   B couples joint 1      g_B = psidot1 - qdot1
//   C brakes spring 2      g_C = psidot2
//   D couples joint 2      g_D = psidot2 - qdot2
enum class ClutchId { A = 0, B = 1, C = 2, D = 3 };

inline constexpr std::array<ClutchId, 4> kClutches = {ClutchId::A, ClutchId::B, ClutchId::C, ClutchId::D};

inline int index(ClutchId id) { return static_cast<int>(id); }
char clutchName(ClutchId id);
ClutchId clutchFromName(char name);

/// Row Gamma_i = d g_i / d xi.
Eigen::RowVector4d clutchJacobian(ClutchId id);

inline double relativeVelocity(ClutchId id, const Vec4& xidot) { return clutchJacobian(id).dot(xidot); }

/// Sticking set of a frictional mode; the remaining clutches slip.
using StickingSet = std::bitset<4>;

/// One of the nine admissible stick/slip combinations.
struct FrictionMode {
  int p = 1;
  StickingSet sticking;

  static FrictionMode fromIndex(int p);
  /// The mode with exactly this sticking set, if admissible.
  static std::optional<FrictionMode> fromSticking(StickingSet sticking);
  bool sticks(ClutchId id) const { return sticking.test(index(id)); }
  std::string label() const;  // e.g. "7{A,D}"
};

struct FrictionParams {
  /// mu_s / mu_d; break-away torque is static_ratio * M_i.
  double static_ratio = 1.0;
  /// After a clutch starts slipping it may not re-stick for this long [s].
  double min_dwell = 1e-4;
  /// |g| below this counts as "at rest" when choosing a slip direction [rad/s].
  double rest_tolerance = 1e-8;
};

struct ClutchEvent {
  double t = 0.0;
  bool engage = true;
};

/// Clutch torque capacities M_i(t). Engaging ramps towards m_max at slope
/// m_max / t_connect, disengaging ramps to zero at slope m_max / t_separate.
/// Zero ramp times give step changes.
struct ClutchCommands {
  std::array<bool, 4> initially_engaged = {false, false, false, false};
  std::array<std::vector<ClutchEvent>, 4> events;
  double t_connect = 0.02;
  double t_separate = 0.02;
  double m_max = 30.0;

  double capacity(ClutchId id, double t) const;
  Vec4 capacities(double t) const;
  /// Left limits: commands issued exactly at t are not yet in effect.
  double capacityBefore(ClutchId id, double t) const;
  Vec4 capacitiesBefore(double t) const;
  /// Commanded (target) state of a clutch at t.
  bool commandedEngaged(ClutchId id, double t) const;
  /// Times where some capacity has a kink, inside [0, horizon].
  std::vector<double> breakpoints(double horizon) const;
  /// Rejects unsorted events, negative parameters, and schedules that command
  /// both clutches of one joint engaged at the same time.
  void validate() const;

  /// Engage/disengage schedule that mirrors a switching signal of the ideal
  /// model. `advance` shifts every switch earlier by that many seconds.
  static ClutchCommands fromSwitching(const SwitchingSignal& sigma, double advance, double m_max,
                                      double t_connect, double t_separate);

 private:
  double levelAt(ClutchId id, double t, bool before) const;
};

/// Static torques of all sticking clutches, solved jointly so that
/// Gamma_s xiddot = 0 for Pi xiddot + forcing = Gamma_s^T zeta_s, where
/// forcing = eta - tau_k - sum over slipping clutches of Gamma_d^T zeta_d.
Eigen::VectorXd staticTorques(const Mat4& Pi, const std::vector<ClutchId>& sticking, const Vec4& forcing);

/// Coulomb torque -sign(g) M, zero for g == 0.
inline double dynamicTorque(double g, double capacity) {
  return g > 0.0 ? -capacity : (g < 0.0 ? capacity : 0.0);
}

/// Mode plus the memory a Coulomb contact needs at g == 0.
struct ContactState {
  FrictionMode mode;
  /// Direction of friction torque for slipping clutches while |g| is at rest.
  Vec4 slip_direction = Vec4::Zero();
  /// Earliest time each clutch may stick again.
  Vec4 restick_after = Vec4::Constant(-1.0);
  /// Slipping clutches apply slip_direction * M whatever the sign of g. Set
  /// for the span of one integration step so the right-hand side stays smooth.
  bool frozen = false;
  /// Slipping clutches at rest that cannot stick because their partner does.
  /// While frozen they apply the torque that keeps g at zero, up to capacity.
  StickingSet held;
};

/// |g| below which a slipping clutch counts as at rest when its direction is
/// frozen, and the largest |g| a clutch may have when it starts to stick.
inline constexpr double kStickVelocityTolerance = 1e-6;

/// Copy of `contact` with the friction direction of every slipping clutch
/// fixed: opposing g, or at rest, along the torque that would hold it. A
/// clutch at rest whose sticking set would not be admissible is marked held.
ContactState freezeDirections(const BsaVector& x, const ContactState& contact, const Vec4& M,
                              const PendulumParams& p, const FrictionParams& fp);

struct ContactTorques {
  Vec4 zeta = Vec4::Zero();  // per clutch, static or dynamic
  Vec4 generalized = Vec4::Zero();  // sum Gamma_i^T zeta_i
};

/// Contact torques for the given mode at state x with capacities M.
ContactTorques contactTorques(const BsaVector& x, const ContactState& contact, const Vec4& M,
                              const PendulumParams& p, const FrictionParams& fp);

/// xdot = (u_theta, xidot, Pi^-1 (tau_k - eta + sum Gamma_i^T zeta_i)).
BsaVector frictionFlow(const BsaVector& x, const Vec2& u, const ContactState& contact, const Vec4& M,
                       const PendulumParams& p, const FrictionParams& fp);

/// frictionFlow after checking |g_i| <= tol for every sticking clutch.
BsaVector frictionFlowChecked(const BsaVector& x, const Vec2& u, const ContactState& contact, const Vec4& M,
                              const PendulumParams& p, const FrictionParams& fp, double tol = 1e-6);

struct FrictionTransition {
  FrictionMode from;
  FrictionMode to;
  ClutchId clutch = ClutchId::A;
  bool to_stick = false;
  /// Static torque of the clutch when it broke away (stick -> slip).
  double holding_torque = 0.0;
};

/// Guard evaluation at state x and time t:
///  * a sticking clutch slips when |zeta_s,i| > static_ratio * M_i;
///  * a slipping clutch with M_i > 0 and |g_i| <= rest_tolerance (a zero
///    crossing) sticks when the joint static solution stays within capacity
///    and the resulting sticking set is admissible.
/// Returns the first applicable transition, slips before sticks.
std::optional<FrictionTransition> guardCheck(const BsaVector& x, double t, const ContactState& contact,
                                             const Vec4& M, const PendulumParams& p, const FrictionParams& fp,
                                             double zero_tolerance);

/// Sticking clutches consistent with x at rest relative velocity and capacity.
ContactState initialContact(const BsaVector& x, const Vec4& M, const PendulumParams& p, const FrictionParams& fp,
                            double zero_tolerance = 1e-9);

}  // namespace bsa
