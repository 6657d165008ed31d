#include "bsa/friction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bsa {

char clutchName(ClutchId id) { return static_cast<char>('A' + index(id)); }

ClutchId clutchFromName(char name) {
  const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(name)));
  if (upper < 'A' || upper > 'D') throw std::invalid_argument(std::string("unknown clutch '") + name + "'");
  return static_cast<ClutchId>(upper - 'A');
}

Eigen::RowVector4d clutchJacobian(ClutchId id) {
  switch (id) {
    case ClutchId::A: return {1.0, 0.0, 0.0, 0.0};
    case ClutchId::B: return {1.0, 0.0, -1.0, 0.0};
    case ClutchId::C: return {0.0, 1.0, 0.0, 0.0};
    case ClutchId::D: return {0.0, 1.0, 0.0, -1.0};
  }
  throw std::invalid_argument("bad clutch id");
}

namespace {

// Admissible sticking sets, indexed by mode p - 1. Bits are A, B, C, D.
constexpr std::array<unsigned long, 9> kModeSets = {
    0b0000,  // 1 {}
    0b0001,  // 2 {A}
    0b0010,  // 3 {B}
    0b0100,  // 4 {C}
    0b1000,  // 5 {D}
    0b0101,  // 6 {A, C}
    0b1001,  // 7 {A, D}
    0b0110,  // 8 {B, C}
    0b1010,  // 9 {B, D}
};

std::vector<ClutchId> members(StickingSet set) {
  std::vector<ClutchId> out;
  for (ClutchId id : kClutches) {
    if (set.test(index(id))) out.push_back(id);
  }
  return out;
}

double rampRate(double duration, double m_max) {
  return duration > 0.0 ? m_max / duration : std::numeric_limits<double>::infinity();
}

}  // namespace

FrictionMode FrictionMode::fromIndex(int p) {
  if (p < 1 || p > 9) throw std::invalid_argument("friction mode index must be in 1..9");
  FrictionMode m;
  m.p = p;
  m.sticking = StickingSet(kModeSets[p - 1]);
  return m;
}

std::optional<FrictionMode> FrictionMode::fromSticking(StickingSet sticking) {
  for (int p = 1; p <= 9; ++p) {
    if (kModeSets[p - 1] == sticking.to_ulong()) return fromIndex(p);
  }
  return std::nullopt;
}

std::string FrictionMode::label() const {
  std::string s = std::to_string(p) + "{";
  bool first = true;
  for (ClutchId id : kClutches) {
    if (!sticks(id)) continue;
    if (!first) s += ",";
    s += clutchName(id);
    first = false;
  }
  return s + "}";
}

double ClutchCommands::capacity(ClutchId id, double t) const { return levelAt(id, t, false); }

double ClutchCommands::capacityBefore(ClutchId id, double t) const { return levelAt(id, t, true); }

double ClutchCommands::levelAt(ClutchId id, double t, bool before) const {
  const double up = rampRate(t_connect, m_max);
  const double down = rampRate(t_separate, m_max);
  bool target = initially_engaged[index(id)];
  double level = target ? m_max : 0.0;
  double t_prev = -std::numeric_limits<double>::infinity();

  auto advance = [&](double until) {
    if (target) {
      level = std::isinf(up) ? m_max : std::min(m_max, level + up * (until - t_prev));
    } else {
      level = std::isinf(down) ? 0.0 : std::max(0.0, level - down * (until - t_prev));
    }
    t_prev = until;
  };

  for (const auto& e : events[index(id)]) {
    if (before ? e.t >= t : e.t > t) break;
    if (std::isfinite(t_prev)) advance(e.t);
    t_prev = e.t;
    target = e.engage;
  }
  if (std::isfinite(t_prev)) advance(t);
  return level;
}

Vec4 ClutchCommands::capacities(double t) const {
  Vec4 M;
  for (ClutchId id : kClutches) M(index(id)) = capacity(id, t);
  return M;
}

Vec4 ClutchCommands::capacitiesBefore(double t) const {
  Vec4 M;
  for (ClutchId id : kClutches) M(index(id)) = capacityBefore(id, t);
  return M;
}

bool ClutchCommands::commandedEngaged(ClutchId id, double t) const {
  bool state = initially_engaged[index(id)];
  for (const auto& e : events[index(id)]) {
    if (e.t > t) break;
    state = e.engage;
  }
  return state;
}

std::vector<double> ClutchCommands::breakpoints(double horizon) const {
  std::vector<double> out;
  for (ClutchId id : kClutches) {
    const auto& ev = events[index(id)];
    for (std::size_t k = 0; k < ev.size(); ++k) {
      const double start = ev[k].t;
      out.push_back(start);
      const double level = capacity(id, start);
      const double remaining = ev[k].engage ? m_max - level : level;
      const double duration = ev[k].engage ? t_connect : t_separate;
      const double end = start + (m_max > 0.0 ? remaining / m_max * duration : 0.0);
      if (k + 1 >= ev.size() || end < ev[k + 1].t) out.push_back(end);
    }
  }
  std::erase_if(out, [&](double t) { return !(t > 0.0 && t < horizon); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void ClutchCommands::validate() const {
  if (!(m_max >= 0.0) || !(t_connect >= 0.0) || !(t_separate >= 0.0)) {
    throw std::invalid_argument("clutch m_max, t_connect and t_separate must be nonnegative");
  }
  std::vector<double> times = {0.0};
  for (ClutchId id : kClutches) {
    const auto& ev = events[index(id)];
    for (std::size_t k = 0; k < ev.size(); ++k) {
      if (!std::isfinite(ev[k].t)) throw std::invalid_argument("clutch event time must be finite");
      if (k > 0 && ev[k].t < ev[k - 1].t) {
        throw std::invalid_argument(std::string("clutch ") + clutchName(id) + " events are not sorted");
      }
      times.push_back(ev[k].t);
    }
  }
  for (double t : times) {
    if (commandedEngaged(ClutchId::A, t) && commandedEngaged(ClutchId::B, t)) {
      throw std::invalid_argument("clutches A and B of joint 1 both commanded engaged at t = " +
                                  std::to_string(t));
    }
    if (commandedEngaged(ClutchId::C, t) && commandedEngaged(ClutchId::D, t)) {
      throw std::invalid_argument("clutches C and D of joint 2 both commanded engaged at t = " +
                                  std::to_string(t));
    }
  }
}

ClutchCommands ClutchCommands::fromSwitching(const SwitchingSignal& sigma, double advance, double m_max,
                                             double t_connect, double t_separate) {
  sigma.validate();
  ClutchCommands cmd;
  cmd.m_max = m_max;
  cmd.t_connect = t_connect;
  cmd.t_separate = t_separate;

  BsaMode current = BsaMode::fromIndex(sigma.stages.front().mode);
  auto coupling = [](int joint, bool connected) {
    return joint == 0 ? (connected ? ClutchId::B : ClutchId::A) : (connected ? ClutchId::D : ClutchId::C);
  };
  cmd.initially_engaged[index(coupling(0, current.c1))] = true;
  cmd.initially_engaged[index(coupling(1, current.c2))] = true;

  double t = 0.0;
  for (std::size_t s = 1; s < sigma.stages.size(); ++s) {
    t += sigma.stages[s - 1].duration;
    const BsaMode next = BsaMode::fromIndex(sigma.stages[s].mode);
    const double ts = std::max(0.0, t - advance);
    const std::array<bool, 2> before = {current.c1, current.c2};
    const std::array<bool, 2> after = {next.c1, next.c2};
    for (int j = 0; j < 2; ++j) {
      if (before[j] == after[j]) continue;
      cmd.events[index(coupling(j, before[j]))].push_back({ts, false});
      cmd.events[index(coupling(j, after[j]))].push_back({ts, true});
    }
    current = next;
  }
  cmd.validate();
  return cmd;
}

Eigen::VectorXd staticTorques(const Mat4& Pi, const std::vector<ClutchId>& sticking, const Vec4& forcing) {
  const int n = static_cast<int>(sticking.size());
  if (n == 0) return Eigen::VectorXd();
  Eigen::MatrixXd G(n, 4);
  for (int r = 0; r < n; ++r) G.row(r) = clutchJacobian(sticking[r]);
  return constraintTorque(Pi, G, Vec4::Zero(), forcing);
}

namespace {

struct Forces {
  Vec4 tau_minus_eta;
  Mat4 Pi;
};

Forces baseForces(const BsaVector& x, const PendulumParams& p) {
  using namespace bsa_index;
  const Vec2 theta = x.segment<2>(kTheta);
  const Vec4 xi = x.segment<4>(kXi);
  const Vec4 xidot = x.segment<4>(kXiDot);
  Forces f;
  f.Pi = bigInertia<double>(xi.tail<2>(), p);
  f.tau_minus_eta = springTorque<double>(theta, xi.head<2>(), stiffnessMatrix(p)) - extendedBias<double>(xi, xidot, p);
  return f;
}

double slipTorque(ClutchId id, const Vec4& xidot, const ContactState& contact, const Vec4& M,
                  const FrictionParams& fp) {
  const double g = relativeVelocity(id, xidot);
  const int i = index(id);
  if (contact.frozen || std::abs(g) <= fp.rest_tolerance) return contact.slip_direction(i) * M(i);
  return dynamicTorque(g, M(i));
}

ContactTorques torquesFor(StickingSet sticking, const Forces& f, const Vec4& xidot, const ContactState& contact,
                          const Vec4& M, const FrictionParams& fp) {
  StickingSet held = contact.frozen ? contact.held & ~sticking : StickingSet();
  for (;;) {
    ContactTorques out;
    Vec4 applied = f.tau_minus_eta;
    const StickingSet solved = sticking | held;
    for (ClutchId id : kClutches) {
      if (solved.test(index(id))) continue;
      const double z = slipTorque(id, xidot, contact, M, fp);
      out.zeta(index(id)) = z;
      applied += clutchJacobian(id).transpose() * z;
    }
    const auto stuck = members(solved);
    if (!stuck.empty()) {
      const Eigen::VectorXd zs = staticTorques(f.Pi, stuck, -applied);
      for (std::size_t r = 0; r < stuck.size(); ++r) {
        out.zeta(index(stuck[r])) = zs(static_cast<Eigen::Index>(r));
      }
    }
    // A held clutch that would need more than its capacity slips after all.
    bool released = false;
    for (ClutchId id : kClutches) {
      const int i = index(id);
      if (held.test(i) && std::abs(out.zeta(i)) > M(i)) {
        held.reset(i);
        released = true;
      }
    }
    if (released) continue;
    for (ClutchId id : kClutches) out.generalized += clutchJacobian(id).transpose() * out.zeta(index(id));
    return out;
  }
}

}  // namespace

ContactState freezeDirections(const BsaVector& x, const ContactState& contact, const Vec4& M,
                              const PendulumParams& p, const FrictionParams& fp) {
  ContactState out = contact;
  out.frozen = true;
  out.held.reset();
  const Vec4 xidot = x.segment<4>(bsa_index::kXiDot);
  std::optional<Forces> f;
  for (ClutchId id : kClutches) {
    const int i = index(id);
    if (contact.mode.sticks(id)) continue;
    const double g = relativeVelocity(id, xidot);
    if (std::abs(g) > kStickVelocityTolerance) {
      out.slip_direction(i) = g > 0.0 ? -1.0 : 1.0;
      continue;
    }
    StickingSet holding = contact.mode.sticking;
    holding.set(i);
    if (!f) f = baseForces(x, p);
    const double z = torquesFor(holding, *f, xidot, contact, M, fp).zeta(i);
    if (z != 0.0) out.slip_direction(i) = z > 0.0 ? 1.0 : -1.0;
    if (!FrictionMode::fromSticking(holding) && M(i) > 0.0) out.held.set(i);
  }
  return out;
}

ContactTorques contactTorques(const BsaVector& x, const ContactState& contact, const Vec4& M,
                              const PendulumParams& p, const FrictionParams& fp) {
  const Forces f = baseForces(x, p);
  return torquesFor(contact.mode.sticking, f, x.segment<4>(bsa_index::kXiDot), contact, M, fp);
}

BsaVector frictionFlow(const BsaVector& x, const Vec2& u, const ContactState& contact, const Vec4& M,
                       const PendulumParams& p, const FrictionParams& fp) {
  using namespace bsa_index;
  const Forces f = baseForces(x, p);
  const ContactTorques zt = torquesFor(contact.mode.sticking, f, x.segment<4>(kXiDot), contact, M, fp);
  BsaVector xdot;
  xdot.segment<2>(kTheta) = u;
  xdot.segment<4>(kXi) = x.segment<4>(kXiDot);
  xdot.segment<4>(kXiDot) = f.Pi.llt().solve(f.tau_minus_eta + zt.generalized);
  return xdot;
}

BsaVector frictionFlowChecked(const BsaVector& x, const Vec2& u, const ContactState& contact, const Vec4& M,
                              const PendulumParams& p, const FrictionParams& fp, double tol) {
  const Vec4 xidot = x.segment<4>(bsa_index::kXiDot);
  for (ClutchId id : kClutches) {
    if (!contact.mode.sticks(id)) continue;
    const double g = relativeVelocity(id, xidot);
    if (!(std::abs(g) <= tol)) {
      throw ConstraintViolation(std::string("clutch ") + clutchName(id) + " is marked sticking but slips at " +
                                std::to_string(g) + " rad/s");
    }
  }
  return frictionFlow(x, u, contact, M, p, fp);
}

std::optional<FrictionTransition> guardCheck(const BsaVector& x, double t, const ContactState& contact,
                                             const Vec4& M, const PendulumParams& p, const FrictionParams& fp,
                                             double zero_tolerance) {
  const Forces f = baseForces(x, p);
  const Vec4 xidot = x.segment<4>(bsa_index::kXiDot);
  const ContactTorques current = torquesFor(contact.mode.sticking, f, xidot, contact, M, fp);

  for (ClutchId id : kClutches) {
    const int i = index(id);
    if (!contact.mode.sticks(id)) continue;
    const double limit = fp.static_ratio * M(i);
    if (std::abs(current.zeta(i)) > limit * (1.0 + 1e-12) + 1e-12) {
      StickingSet next = contact.mode.sticking;
      next.reset(i);
      return FrictionTransition{contact.mode, *FrictionMode::fromSticking(next), id, false, current.zeta(i)};
    }
  }

  for (ClutchId id : kClutches) {
    const int i = index(id);
    if (contact.mode.sticks(id) || !(M(i) > 0.0) || t < contact.restick_after(i)) continue;
    if (std::abs(relativeVelocity(id, xidot)) > zero_tolerance) continue;
    StickingSet candidate = contact.mode.sticking;
    candidate.set(i);
    const auto mode = FrictionMode::fromSticking(candidate);
    if (!mode) continue;
    const ContactTorques trial = torquesFor(candidate, f, xidot, contact, M, fp);
    bool holds = true;
    for (ClutchId other : kClutches) {
      const int j = index(other);
      if (candidate.test(j) && std::abs(trial.zeta(j)) > fp.static_ratio * M(j)) holds = false;
    }
    if (holds) return FrictionTransition{contact.mode, *mode, id, true, trial.zeta(i)};
  }
  return std::nullopt;
}

ContactState initialContact(const BsaVector& x, const Vec4& M, const PendulumParams& p, const FrictionParams& fp,
                            double zero_tolerance) {
  const Vec4 xidot = x.segment<4>(bsa_index::kXiDot);
  StickingSet sticking;
  const std::array<std::array<ClutchId, 2>, 2> joints = {{{ClutchId::A, ClutchId::B}, {ClutchId::C, ClutchId::D}}};
  for (const auto& pair : joints) {
    int best = -1;
    for (ClutchId id : pair) {
      const int i = index(id);
      if (M(i) > 0.0 && std::abs(relativeVelocity(id, xidot)) <= zero_tolerance && (best < 0 || M(i) > M(best))) {
        best = i;
      }
    }
    if (best >= 0) sticking.set(best);
  }
  ContactState contact;
  contact.mode = *FrictionMode::fromSticking(sticking);
  // Drop contacts whose holding torque exceeds capacity; they start slipping
  // in the direction they were holding.
  for (int guard = 0; guard < 4; ++guard) {
    const ContactTorques z = contactTorques(x, contact, M, p, fp);
    bool changed = false;
    for (ClutchId id : kClutches) {
      const int i = index(id);
      if (contact.mode.sticks(id) && std::abs(z.zeta(i)) > fp.static_ratio * M(i)) {
        StickingSet next = contact.mode.sticking;
        next.reset(i);
        contact.mode = *FrictionMode::fromSticking(next);
        contact.slip_direction(i) = z.zeta(i) > 0.0 ? 1.0 : -1.0;
        changed = true;
        break;
      }
    }
    if (!changed) break;
  }
  return contact;
}

}  // namespace bsa
