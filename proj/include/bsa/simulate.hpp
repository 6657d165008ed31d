#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bsa/dynamics.hpp"
#include "bsa/friction.hpp"
#include "bsa/hybrid.hpp"
#include "bsa/power.hpp"
#include "bsa/vsa.hpp"

namespace bsa {

enum class IntegrationMethod { Rk4, Rk45 };

struct IntegratorConfig {
  double dt = 1e-4;
  IntegrationMethod method = IntegrationMethod::Rk4;
  /// Relative/absolute error targets of the adaptive method.
  double rtol = 1e-9;
  double atol = 1e-11;
  double event_tolerance = 1e-9;
  double constraint_tolerance = 1e-6;

  void validate() const;
};

IntegrationMethod parseIntegrationMethod(const std::string& name);

/// Zero-order-hold signal: values[i] applies on [times[i], times[i+1]).
/// The last value holds past the final breakpoint.
class InputSignal {
 public:
  InputSignal() = default;
  InputSignal(std::vector<double> times, std::vector<Eigen::VectorXd> values);
  static InputSignal constant(const Eigen::VectorXd& value);

  Eigen::VectorXd operator()(double t) const;
  /// Breakpoints strictly inside (t0, t1).
  std::vector<double> breakpoints(double t0, double t1) const;
  int size() const { return values_.empty() ? 0 : static_cast<int>(values_.front().size()); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Eigen::VectorXd>& values() const { return values_; }

 private:
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> values_;
};

enum class ModelKind { Bsa, Vsa, Friction };
std::string toString(ModelKind kind);

enum class EventKind { ScheduledSwitch, Impulse, Stick, Slip };
std::string toString(EventKind kind);

struct TrajectoryEvent {
  double t = 0.0;
  EventKind kind = EventKind::ScheduledSwitch;
  int mode_before = 0;
  int mode_after = 0;
  /// Clutch involved in a stick/slip event, -1 otherwise.
  int clutch = -1;
  Eigen::VectorXd impulse;
};

struct TrajectorySample {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  int mode = 0;
  double v_tcp = 0.0;
  EnergyBreakdown energy;
  PowerSample power;
  /// Left limit of the power at t (differs from `power` at input switches).
  PowerSample power_left;
  /// Friction dissipation rate sum |g_i| M_i over slipping clutches [W].
  double dissipation = 0.0;
};

/// Sampled solution of one simulation run. Sample times increase strictly and
/// every event time is a sample; the sample carries the post-event state.
struct Trajectory {
  ModelKind model = ModelKind::Bsa;
  std::vector<TrajectorySample> samples;
  std::vector<TrajectoryEvent> events;
  std::vector<std::string> warnings;

  const TrajectorySample& back() const { return samples.back(); }
  double finalTcpSpeed() const { return samples.empty() ? 0.0 : samples.back().v_tcp; }
  WorkSummary work() const;
  /// Energy dissipated by clutch slip, integral of `dissipation` [J].
  double frictionLoss() const;
};

/// Ideal BSA: flows of the active mode, velocity jumps at every boundary of
/// the switching signal. Throws std::invalid_argument for a bad schedule and
/// ConstraintViolation when x0 or the integration drifts off the constraint.
Trajectory simulateBsa(const BsaVector& x0, const InputSignal& u_theta, const SwitchingSignal& sigma,
                       const PendulumParams& p, const IntegratorConfig& cfg = {});

/// VSA over [0, horizon]. Stiffness is clamped at zero from below; each clamp
/// is reported in Trajectory::warnings.
Trajectory simulateVsa(const VsaVector& x0, const InputSignal& u, double horizon, const PendulumParams& p,
                       const IntegratorConfig& cfg = {});

/// Frictional clutch model over [0, horizon] with event-located stick/slip
/// transitions. Throws std::runtime_error when an event cannot be localized.
Trajectory simulateFriction(const BsaVector& x0, const InputSignal& u_theta, const ClutchCommands& commands,
                            double horizon, const PendulumParams& p, const FrictionParams& fp = {},
                            const IntegratorConfig& cfg = {});

}  // namespace bsa
