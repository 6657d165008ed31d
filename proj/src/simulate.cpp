#include "bsa/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bsa {

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("integrator step size must be positive");
  if (!(rtol > 0.0) || !(atol > 0.0)) throw std::invalid_argument("integrator tolerances must be positive");
  if (!(event_tolerance > 0.0)) throw std::invalid_argument("event tolerance must be positive");
  if (!(constraint_tolerance > 0.0)) throw std::invalid_argument("constraint tolerance must be positive");
}

IntegrationMethod parseIntegrationMethod(const std::string& name) {
  if (name == "rk4") return IntegrationMethod::Rk4;
  if (name == "rk45" || name == "rk45-adaptive") return IntegrationMethod::Rk45;
  throw std::invalid_argument("unknown integration method '" + name + "'");
}

InputSignal::InputSignal(std::vector<double> times, std::vector<Eigen::VectorXd> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size() || times_.empty()) {
    throw std::invalid_argument("input signal needs one value per breakpoint");
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) throw std::invalid_argument("input signal times must increase");
    if (values_[i].size() != values_[0].size()) throw std::invalid_argument("input signal values differ in size");
  }
}

InputSignal InputSignal::constant(const Eigen::VectorXd& value) { return InputSignal({0.0}, {value}); }

Eigen::VectorXd InputSignal::operator()(double t) const {
  if (values_.empty()) throw std::logic_error("empty input signal");
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const auto i = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  return values_[i];
}

std::vector<double> InputSignal::breakpoints(double t0, double t1) const {
  std::vector<double> out;
  for (double t : times_) {
    if (t > t0 && t < t1) out.push_back(t);
  }
  return out;
}

std::string toString(ModelKind kind) {
  switch (kind) {
    case ModelKind::Bsa: return "bsa";
    case ModelKind::Vsa: return "vsa";
    case ModelKind::Friction: return "friction";
  }
  return "?";
}

std::string toString(EventKind kind) {
  switch (kind) {
    case EventKind::ScheduledSwitch: return "scheduled-switch";
    case EventKind::Impulse: return "impulse";
    case EventKind::Stick: return "stick";
    case EventKind::Slip: return "slip";
  }
  return "?";
}

WorkSummary Trajectory::work() const {
  std::vector<PowerSample> right, left;
  right.reserve(samples.size());
  left.reserve(samples.size());
  for (const auto& s : samples) {
    right.push_back(s.power);
    left.push_back(s.power_left);
  }
  return workSummary(right, left);
}

double Trajectory::frictionLoss() const {
  double loss = 0.0;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    loss += 0.5 * (samples[i + 1].t - samples[i].t) * (samples[i].dissipation + samples[i + 1].dissipation);
  }
  return loss;
}

namespace {

template <typename State, typename Rhs>
State rk4Step(const Rhs& f, double t, const State& x, double h) {
  const State k1 = f(t, x);
  const State k2 = f(t + 0.5 * h, State(x + 0.5 * h * k1));
  const State k3 = f(t + 0.5 * h, State(x + 0.5 * h * k2));
  const State k4 = f(t + h, State(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4) step; returns the 5th-order solution and writes the
// embedded error estimate.
template <typename State, typename Rhs>
State dopriStep(const Rhs& f, double t, const State& x, double h, State& err) {
  const State k1 = f(t, x);
  const State k2 = f(t + h / 5.0, State(x + h * (k1 / 5.0)));
  const State k3 = f(t + 3.0 * h / 10.0, State(x + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2)));
  const State k4 = f(t + 4.0 * h / 5.0, State(x + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3)));
  const State k5 = f(t + 8.0 * h / 9.0, State(x + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 +
                                                       64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4)));
  const State k6 = f(t + h, State(x + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3 +
                                           49.0 / 176.0 * k4 - 5103.0 / 18656.0 * k5)));
  const State y = x + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 - 2187.0 / 6784.0 * k5 +
                           11.0 / 84.0 * k6);
  const State k7 = f(t + h, y);
  const State z = x + h * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 + 393.0 / 640.0 * k4 -
                           92097.0 / 339200.0 * k5 + 187.0 / 2100.0 * k6 + 1.0 / 40.0 * k7);
  err = y - z;
  return y;
}

// Integrates x over [t0, t1] with a fixed right-hand side, calling
// on_step(t, x) after every accepted step. The final step lands on t1 exactly.
template <typename State, typename Rhs, typename OnStep>
State integrateSegment(const Rhs& f, State x, double t0, double t1, const IntegratorConfig& cfg,
                       const OnStep& on_step) {
  const double span = t1 - t0;
  if (!(span > 0.0)) return x;
  if (cfg.method == IntegrationMethod::Rk4) {
    const int n = std::max(1, static_cast<int>(std::ceil(span / cfg.dt - 1e-9)));
    const double h = span / n;
    for (int k = 0; k < n; ++k) {
      const double t = t0 + k * h;
      x = rk4Step(f, t, x, h);
      on_step(k + 1 == n ? t1 : t0 + (k + 1) * h, x);
    }
    return x;
  }
  double t = t0;
  double h = std::min(cfg.dt, span);
  int steps = 0;
  while (t < t1) {
    if (++steps > 10'000'000) throw std::runtime_error("adaptive integrator exceeded step budget");
    const bool last = t + h >= t1 - 1e-14 * std::max(1.0, std::abs(t1));
    const double step = last ? t1 - t : h;
    State err;
    const State y = dopriStep(f, t, x, step, err);
    double norm = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double sc = cfg.atol + cfg.rtol * std::max(std::abs(x(i)), std::abs(y(i)));
      norm = std::max(norm, std::abs(err(i)) / sc);
    }
    if (norm <= 1.0 || step < 1e-14) {
      t = last ? t1 : t + step;
      x = y;
      on_step(t, x);
    }
    const double factor = norm > 0.0 ? 0.9 * std::pow(norm, -0.2) : 5.0;
    h = std::clamp(step * std::clamp(factor, 0.2, 5.0), 1e-14, std::max(cfg.dt * 100.0, 1e-14));
  }
  return x;
}

std::vector<double> segmentBounds(double t0, double t1, std::vector<double> inner) {
  inner.push_back(t0);
  inner.push_back(t1);
  std::erase_if(inner, [&](double t) { return t < t0 || t > t1; });
  std::sort(inner.begin(), inner.end());
  inner.erase(std::unique(inner.begin(), inner.end(),
                          [](double a, double b) { return std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(a)); }),
              inner.end());
  return inner;
}

TrajectorySample bsaSample(double t, const BsaVector& x, const Vec2& u_right, const Vec2& u_left, int mode,
                           const PendulumParams& p) {
  using namespace bsa_index;
  TrajectorySample s;
  s.t = t;
  s.x = x;
  s.u = u_right;
  s.mode = mode;
  s.v_tcp = tcpSpeed(x.segment<2>(kQ), x.segment<2>(kQDot), p);
  s.energy = energy(x.segment<2>(kTheta), x.segment<4>(kXi), x.segment<4>(kXiDot), stiffnessMatrix(p), p);
  s.power = bsaPower(t, x, u_right, p);
  s.power_left = bsaPower(t, x, u_left, p);
  return s;
}

TrajectorySample vsaSample(double t, const VsaVector& x, const Vec<4>& u_right, const Vec<4>& u_left,
                           const PendulumParams& p) {
  using namespace vsa_index;
  TrajectorySample s;
  s.t = t;
  s.x = x;
  s.u = u_right;
  s.v_tcp = tcpSpeed(x.segment<2>(kQ), x.segment<2>(kQDot), p);
  s.energy = vsaEnergy(x.segment<2>(kTheta), x.segment<2>(kStiffness), x.segment<2>(kQ), x.segment<2>(kQDot), p);
  s.power = vsaPower(t, x, u_right);
  s.power_left = vsaPower(t, x, u_left);
  return s;
}

void requireInputSize(const InputSignal& u, int n, const char* what) {
  if (u.size() != n) {
    throw std::invalid_argument(std::string(what) + " input signal must have " + std::to_string(n) + " channels");
  }
}

}  // namespace

Trajectory simulateBsa(const BsaVector& x0, const InputSignal& u_theta, const SwitchingSignal& sigma,
                       const PendulumParams& p, const IntegratorConfig& cfg) {
  cfg.validate();
  sigma.validate();
  requireInputSize(u_theta, 2, "BSA");

  BsaMode mode = BsaMode::fromIndex(sigma.stages.front().mode);
  if (!(constraintResidual(x0, mode).norm() <= cfg.constraint_tolerance)) {
    throw ConstraintViolation("initial state is inconsistent with mode " + mode.name());
  }

  Trajectory traj;
  traj.model = ModelKind::Bsa;
  BsaVector x = x0;
  traj.samples.push_back(bsaSample(0.0, x, u_theta(0.0), u_theta(0.0), mode.p, p));

  double t = 0.0;
  for (std::size_t s = 0; s < sigma.stages.size(); ++s) {
    const double t_end = t + sigma.stages[s].duration;
    const auto bounds = segmentBounds(t, t_end, u_theta.breakpoints(t, t_end));
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      const Vec2 u = u_theta(bounds[b]);
      const auto rhs = [&](double, const BsaVector& xs) { return bsaFlow<double>(xs, u, mode.C, p); };
      x = integrateSegment(rhs, x, bounds[b], bounds[b + 1], cfg, [&](double ts, BsaVector& xs) {
        const double drift = constraintResidual(xs, mode).norm();
        if (!(drift <= cfg.constraint_tolerance)) {
          throw ConstraintViolation("constraint drift " + std::to_string(drift) + " rad/s at t = " +
                                    std::to_string(ts));
        }
        // Round-off in the constrained accelerations grows like 1 / Js; the
        // momentum projection removes the accumulated part every step.
        xs = jump(xs, mode, p).x;
        traj.samples.push_back(bsaSample(ts, xs, u_theta(ts), u, mode.p, p));
      });
    }
    t = t_end;
    if (s + 1 == sigma.stages.size()) break;

    const BsaMode next = BsaMode::fromIndex(sigma.stages[s + 1].mode);
    const JumpResult jr = jump(x, next, p);
    TrajectoryEvent sw;
    sw.t = t;
    sw.kind = EventKind::ScheduledSwitch;
    sw.mode_before = mode.p;
    sw.mode_after = next.p;
    traj.events.push_back(sw);
    if (jr.impulse.norm() > 0.0) {
      TrajectoryEvent imp = sw;
      imp.kind = EventKind::Impulse;
      imp.impulse = jr.impulse;
      traj.events.push_back(imp);
    }
    x = jr.x;
    mode = next;
    // The boundary sample carries the post-jump state; keep its left-limit power.
    TrajectorySample& last = traj.samples.back();
    const PowerSample left = last.power_left;
    last = bsaSample(t, x, u_theta(t), u_theta(t), mode.p, p);
    last.power_left = left;
  }
  return traj;
}

Trajectory simulateVsa(const VsaVector& x0, const InputSignal& u, double horizon, const PendulumParams& p,
                       const IntegratorConfig& cfg) {
  using namespace vsa_index;
  cfg.validate();
  requireInputSize(u, 4, "VSA");
  if (!(horizon > 0.0)) throw std::invalid_argument("VSA horizon must be positive");
  if ((x0.segment<2>(kStiffness).array() < 0.0).any()) throw std::invalid_argument("initial stiffness negative");

  Trajectory traj;
  traj.model = ModelKind::Vsa;
  VsaVector x = x0;
  traj.samples.push_back(vsaSample(0.0, x, u(0.0), u(0.0), p));
  const auto bounds = segmentBounds(0.0, horizon, u.breakpoints(0.0, horizon));
  for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
    const Vec<4> ub = u(bounds[b]);
    // Stiffness below zero is held at zero (its rate is clipped as well).
    const auto rhs = [&](double, const VsaVector& xs) {
      VsaVector xd = vsaFlow<double>(xs, ub, p);
      for (int j = 0; j < 2; ++j) {
        if (xs(kStiffness + j) <= 0.0 && xd(kStiffness + j) < 0.0) xd(kStiffness + j) = 0.0;
      }
      return xd;
    };
    x = integrateSegment(rhs, x, bounds[b], bounds[b + 1], cfg, [&](double ts, VsaVector& xs) {
      for (int j = 0; j < 2; ++j) {
        if (xs(kStiffness + j) < 0.0) {
          if (traj.warnings.size() < 20) {
            traj.warnings.push_back("stiffness k" + std::to_string(j + 1) + " clamped at 0 (was " +
                                    std::to_string(xs(kStiffness + j)) + ") at t = " + std::to_string(ts));
          }
          xs(kStiffness + j) = 0.0;
        }
      }
      traj.samples.push_back(vsaSample(ts, xs, u(ts), ub, p));
    });
  }
  return traj;
}

namespace {

struct FrictionStepper {
  const InputSignal& u;
  const ClutchCommands& commands;
  const PendulumParams& p;
  const FrictionParams& fp;

  BsaVector step(const BsaVector& x, double t, double h, const Vec2& ut, const ContactState& contact) const {
    // A step never crosses a command time, so only its start sees the right limit.
    const auto rhs = [&](double ts, const BsaVector& xs) {
      const Vec4 M = ts > t ? commands.capacitiesBefore(ts) : commands.capacities(ts);
      return frictionFlow(xs, ut, contact, M, p, fp);
    };
    return rk4Step(rhs, t, x, h);
  }
};

// Slipping clutches whose relative velocity may legitimately cross zero and
// trigger a stick check.
bool watchCrossing(ClutchId id, const ContactState& c, double t0, double t1, const ClutchCommands& cmd) {
  const int i = index(id);
  if (c.mode.sticks(id) || c.held.test(i)) return false;
  if (t1 < c.restick_after(i)) return false;
  return cmd.capacity(id, t0) > 0.0 || cmd.capacity(id, t1) > 0.0;
}

struct EventProbe {
  bool any = false;
  int crossing_clutch = -1;
};

EventProbe probe(const BsaVector& x0, const BsaVector& x1, double t0, double t1, const ContactState& c,
                 const ClutchCommands& cmd, const PendulumParams& p, const FrictionParams& fp) {
  EventProbe out;
  const Vec4 M1 = t1 > t0 ? cmd.capacitiesBefore(t1) : cmd.capacities(t1);
  const Vec4 xd0 = x0.segment<4>(bsa_index::kXiDot);
  const Vec4 xd1 = x1.segment<4>(bsa_index::kXiDot);
  if (c.mode.sticking.any()) {
    const ContactTorques z = contactTorques(x1, c, M1, p, fp);
    for (ClutchId id : kClutches) {
      const int i = index(id);
      if (c.mode.sticks(id) && std::abs(z.zeta(i)) > fp.static_ratio * M1(i) * (1.0 + 1e-12) + 1e-12) {
        out.any = true;
      }
    }
  }
  for (ClutchId id : kClutches) {
    if (!watchCrossing(id, c, t0, t1, cmd)) continue;
    const double g0 = relativeVelocity(id, xd0);
    const double g1 = relativeVelocity(id, xd1);
    if ((g0 > 0.0 && g1 <= 0.0) || (g0 < 0.0 && g1 >= 0.0)) {
      out.any = true;
      out.crossing_clutch = index(id);
    }
  }
  return out;
}

TrajectorySample frictionSample(double t, const BsaVector& x, const Vec2& u_right, const Vec2& u_left,
                                const ContactState& c, const ClutchCommands& cmd, const PendulumParams& p,
                                const FrictionParams& fp) {
  TrajectorySample s = bsaSample(t, x, u_right, u_left, c.mode.p, p);
  const Vec4 M = cmd.capacities(t);
  const ContactTorques z = contactTorques(x, c, M, p, fp);
  const Vec4 xidot = x.segment<4>(bsa_index::kXiDot);
  for (ClutchId id : kClutches) {
    if (!c.mode.sticks(id)) s.dissipation += std::abs(relativeVelocity(id, xidot) * z.zeta(index(id)));
  }
  return s;
}

}  // namespace

Trajectory simulateFriction(const BsaVector& x0, const InputSignal& u_theta, const ClutchCommands& commands,
                            double horizon, const PendulumParams& p, const FrictionParams& fp,
                            const IntegratorConfig& cfg) {
  cfg.validate();
  commands.validate();
  requireInputSize(u_theta, 2, "friction");
  if (!(horizon > 0.0)) throw std::invalid_argument("friction horizon must be positive");
  if (cfg.method != IntegrationMethod::Rk4) {
    throw std::invalid_argument("the frictional model is integrated with fixed-step rk4 only");
  }

  Trajectory traj;
  traj.model = ModelKind::Friction;
  ContactState contact = initialContact(x0, commands.capacities(0.0), p, fp);
  BsaVector x = x0;
  traj.samples.push_back(frictionSample(0.0, x, u_theta(0.0), u_theta(0.0), contact, commands, p, fp));

  std::vector<double> stops = commands.breakpoints(horizon);
  for (double b : u_theta.breakpoints(0.0, horizon)) stops.push_back(b);
  const auto bounds = segmentBounds(0.0, horizon, stops);

  const FrictionStepper stepper{u_theta, commands, p, fp};
  const double zero_tol = 1e-8;
  int events_here = 0;
  int stalled_steps = 0;
  double last_event_t = -1.0;

  auto resolve = [&](double t, double g_tol) {
    for (int guard = 0; guard < 16; ++guard) {
      const Vec4 M = commands.capacities(t);
      const auto tr = guardCheck(x, t, freezeDirections(x, contact, M, p, fp), M, p, fp, g_tol);
      if (!tr) return;
      if (t - last_event_t < cfg.event_tolerance) {
        if (++events_here > 64) throw std::runtime_error("stick/slip events do not separate near t = " + std::to_string(t));
      } else {
        events_here = 0;
      }
      last_event_t = t;
      TrajectoryEvent ev;
      ev.t = t;
      ev.kind = tr->to_stick ? EventKind::Stick : EventKind::Slip;
      ev.mode_before = tr->from.p;
      ev.mode_after = tr->to.p;
      ev.clutch = index(tr->clutch);
      traj.events.push_back(ev);
      contact.mode = tr->to;
      const int i = index(tr->clutch);
      if (!tr->to_stick) {
        contact.slip_direction(i) = tr->holding_torque >= 0.0 ? 1.0 : -1.0;
        contact.restick_after(i) = t + fp.min_dwell;
      }
    }
    throw std::runtime_error("stick/slip transitions cascade without settling at t = " + std::to_string(t));
  };

  resolve(0.0, zero_tol);
  traj.samples.back().mode = contact.mode.p;

  for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
    const Vec2 u = u_theta(bounds[b]);
    double t = bounds[b];
    const double t_end = bounds[b + 1];
    while (t < t_end) {
      const double remaining = t_end - t;
      const double h = remaining <= cfg.dt * (1.0 + 1e-9) ? remaining : cfg.dt;
      // Slip directions stay fixed within a step so the right-hand side is smooth.
      const ContactState frozen = freezeDirections(x, contact, commands.capacities(t), p, fp);
      BsaVector x_new = stepper.step(x, t, h, u, frozen);
      double tau = h;
      EventProbe ev = probe(x, x_new, t, t + h, frozen, commands, p, fp);
      double g_tol = zero_tol;
      if (ev.any) {
        double lo = 0.0, hi = h;
        BsaVector x_hi = x_new;
        for (int it = 0; it < 200; ++it) {
          double crossing_g = 0.0;
          if (ev.crossing_clutch >= 0) {
            crossing_g = relativeVelocity(static_cast<ClutchId>(ev.crossing_clutch), x_hi.segment<4>(bsa_index::kXiDot));
          }
          if (hi - lo <= cfg.event_tolerance && std::abs(crossing_g) <= zero_tol) break;
          if (hi - lo <= 1e-15 * std::max(1.0, t)) {
            g_tol = std::max(zero_tol, 1.01 * std::abs(crossing_g));
            break;
          }
          const double mid = 0.5 * (lo + hi);
          const BsaVector x_mid = stepper.step(x, t, mid, u, frozen);
          const EventProbe pm = probe(x, x_mid, t, t + mid, frozen, commands, p, fp);
          if (pm.any) {
            hi = mid;
            x_hi = x_mid;
            ev = pm;
          } else {
            lo = mid;
          }
        }
        tau = hi;
        x_new = x_hi;
        if (ev.crossing_clutch >= 0) {
          g_tol = std::max(g_tol, 1.01 * std::abs(relativeVelocity(static_cast<ClutchId>(ev.crossing_clutch),
                                                                   x_new.segment<4>(bsa_index::kXiDot))));
        }
      }
      const double t_new = (tau == remaining) ? t_end : t + tau;
      if (tau < 1e-12) {
        if (++stalled_steps > 10000) {
          throw std::runtime_error("event localization stalls at t = " + std::to_string(t));
        }
      } else {
        stalled_steps = 0;
      }
      x = x_new;
      const Vec2 u_right = u_theta(t_new);
      if (ev.any) resolve(t_new, std::min(g_tol, kStickVelocityTolerance));
      traj.samples.push_back(frictionSample(t_new, x, u_right, u, contact, commands, p, fp));
      t = t_new;
    }
    resolve(t, zero_tol);
    traj.samples.back().mode = contact.mode.p;
  }
  return traj;
}

}  // namespace bsa
