#include "bsa/power.hpp"

#include <algorithm>
#include <stdexcept>

namespace bsa {

PowerSample bsaPower(double t, const BsaVector& x, const Vec2& u_theta, const PendulumParams& p) {
  using namespace bsa_index;
  const Vec2 k(p.k1, p.k2);
  PowerSample s;
  s.t = t;
  for (int j = 0; j < 2; ++j) {
    const double theta = x(kTheta + j), psi = x(kPsi + j), psidot = x(kPsiDot + j);
    const double tau = k(j) * (theta - psi);
    s.p_out(j) = powerOut(tau, psidot);
    s.es_dot(j) = springEnergyRateBsa(theta, psi, u_theta(j), psidot, k(j));
    s.p_in(j) = s.p_out(j) + s.es_dot(j);
  }
  return s;
}

PowerSample vsaPower(double t, const VsaVector& x, const Vec<4>& u) {
  using namespace vsa_index;
  PowerSample s;
  s.t = t;
  for (int j = 0; j < 2; ++j) {
    const double theta = x(kTheta + j), k = x(kStiffness + j), q = x(kQ + j), qdot = x(kQDot + j);
    s.p_out(j) = powerOut(k * (theta - q), qdot);
    s.es_dot(j) = springEnergyRateVsa(theta, q, u(j), qdot, k, u(2 + j));
    s.p_in(j) = s.p_out(j) + s.es_dot(j);
  }
  return s;
}

WorkSummary workSummary(const std::vector<PowerSample>& right, const std::vector<PowerSample>& left) {
  if (right.empty()) throw std::invalid_argument("work summary of an empty trajectory");
  if (left.size() != right.size()) throw std::invalid_argument("left/right power records differ in length");
  WorkSummary w;
  for (std::size_t i = 0; i + 1 < right.size(); ++i) {
    const double dt = right[i + 1].t - right[i].t;
    for (int j = 0; j < 2; ++j) {
      const double a = right[i].p_in(j);
      const double b = left[i + 1].p_in(j);
      w.positive(j) += 0.5 * dt * (std::max(a, 0.0) + std::max(b, 0.0));
      w.negative(j) += 0.5 * dt * (std::min(a, 0.0) + std::min(b, 0.0));
    }
  }
  return w;
}

}  // namespace bsa
