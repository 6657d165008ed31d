#include "bsa/hybrid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace bsa {

ConstraintMatrix constraintMatrix(int p) {
  ConstraintMatrix C;
  switch (p) {
    case 1:  // DEC-DEC
      C << 1, 0, 0, 0,
           0, 1, 0, 0;
      break;
    case 2:  // SEA-SEA
      C << 1, 0, -1, 0,
           0, 1, 0, -1;
      break;
    case 3:  // DEC-SEA
      C << 1, 0, 0, 0,
           0, 1, 0, -1;
      break;
    case 4:  // SEA-DEC
      C << 1, 0, -1, 0,
           0, 1, 0, 0;
      break;
    default:
      throw std::invalid_argument("unknown BSA mode index " + std::to_string(p));
  }
  return C;
}

BsaMode BsaMode::fromIndex(int p) {
  BsaMode mode;
  mode.C = constraintMatrix(p);
  mode.p = p;
  mode.c1 = (p == 2 || p == 4);
  mode.c2 = (p == 2 || p == 3);
  return mode;
}

BsaMode BsaMode::fromClutches(bool c1, bool c2) {
  if (c1 && c2) return fromIndex(2);
  if (c1) return fromIndex(4);
  if (c2) return fromIndex(3);
  return fromIndex(1);
}

BsaMode BsaMode::fromName(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "dec-dec") return fromIndex(1);
  if (lower == "sea-sea") return fromIndex(2);
  if (lower == "dec-sea") return fromIndex(3);
  if (lower == "sea-dec") return fromIndex(4);
  throw std::invalid_argument("unknown BSA mode name '" + std::string(name) + "'");
}

std::string BsaMode::name() const {
  return std::string(c1 ? "SEA" : "DEC") + "-" + (c2 ? "SEA" : "DEC");
}

namespace {

Eigen::LDLT<Eigen::MatrixXd> schurFactor(const Eigen::MatrixXd& S) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  const auto d = ldlt.vectorD();
  const double scale = d.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 1e-14 * scale)) {
    throw SingularConstraintError("constraint Schur complement C Pi^-1 C^T is singular");
  }
  return ldlt;
}

}  // namespace

Eigen::VectorXd constraintTorque(const Mat4& Pi, const Eigen::MatrixXd& C, const Vec4& tau_k,
                                 const Vec4& eta) {
  const Eigen::LLT<Mat4> pi(Pi);
  const Eigen::MatrixXd PinvCt = pi.solve(C.transpose());
  const auto S = schurFactor(C * PinvCt);
  return S.solve(PinvCt.transpose() * (eta - tau_k));
}

ImpactResult impactMap(const Mat4& Pi, const Eigen::MatrixXd& C, const Vec4& xidot_minus) {
  const Eigen::LLT<Mat4> pi(Pi);
  const Eigen::MatrixXd PinvCt = pi.solve(C.transpose());
  const auto S = schurFactor(C * PinvCt);
  ImpactResult r;
  r.impulse = -S.solve(C * xidot_minus);
  r.xidot_plus = xidot_minus + PinvCt * r.impulse;
  return r;
}

Vec2 constraintResidual(const BsaVector& x, const BsaMode& mode) {
  return mode.C * x.segment<4>(bsa_index::kXiDot);
}

BsaVector bsaFlowChecked(const BsaVector& x, const Vec2& u, const BsaMode& mode, const PendulumParams& p,
                         double tol) {
  const double residual = constraintResidual(x, mode).norm();
  if (!(residual <= tol)) {
    throw ConstraintViolation("state violates " + mode.name() + " velocity constraint by " +
                              std::to_string(residual) + " rad/s");
  }
  return bsaFlow<double>(x, u, mode.C, p);
}

BsaVector BsaState::vector() const {
  BsaVector x;
  x << theta, xi, xidot;
  return x;
}

BsaState BsaState::fromVector(const BsaVector& x, const BsaMode& mode, double t) {
  BsaState s;
  s.theta = x.segment<2>(bsa_index::kTheta);
  s.xi = x.segment<4>(bsa_index::kXi);
  s.xidot = x.segment<4>(bsa_index::kXiDot);
  s.mode = mode;
  s.t = t;
  return s;
}

JumpResult jump(const BsaVector& x_minus, const BsaMode& target, const PendulumParams& p) {
  const Vec2 q = x_minus.segment<2>(bsa_index::kQ);
  const ImpactResult r = impactMap(bigInertia<double>(q, p), target.C, x_minus.segment<4>(bsa_index::kXiDot));
  JumpResult out;
  out.x = x_minus;
  out.x.segment<4>(bsa_index::kXiDot) = r.xidot_plus;
  out.impulse = r.impulse;
  return out;
}

double kineticEnergy(const BsaVector& x, const PendulumParams& p) {
  const Vec4 xidot = x.segment<4>(bsa_index::kXiDot);
  return 0.5 * xidot.dot(bigInertia<double>(x.segment<2>(bsa_index::kQ), p) * xidot);
}

void SwitchingSignal::validate(double horizon, double tol) const {
  if (stages.empty()) throw std::invalid_argument("switching signal has no stages");
  for (const auto& s : stages) {
    constraintMatrix(s.mode);
    if (!(s.duration >= 0.0) || !std::isfinite(s.duration)) {
      throw std::invalid_argument("switching signal durations must be finite and nonnegative");
    }
  }
  if (horizon > 0.0 && std::abs(total() - horizon) > tol) {
    throw std::invalid_argument("switching signal durations sum to " + std::to_string(total()) +
                                " s, expected " + std::to_string(horizon) + " s");
  }
}

double SwitchingSignal::total() const {
  double sum = 0.0;
  for (const auto& s : stages) sum += s.duration;
  return sum;
}

int SwitchingSignal::modeAt(double t) const {
  double start = 0.0;
  for (const auto& s : stages) {
    if (t < start + s.duration) return s.mode;
    start += s.duration;
  }
  return stages.back().mode;
}

}  // namespace bsa
