#include "bsa/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>

#include "bsa/experiment.hpp"
#include "bsa/hybrid.hpp"
#include "bsa/ocp.hpp"
#include "bsa/power.hpp"
#include "bsa/simulate.hpp"

namespace bsa {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

template <int N>
Vec<N> randomVec(Rng& rng, double lo, double hi) {
  Vec<N> v;
  for (int i = 0; i < N; ++i) v(i) = uniform(rng, lo, hi);
  return v;
}

std::string fmt(const char* format, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

template <typename F>
PropertyResult timed(F body) {
  const auto start = std::chrono::steady_clock::now();
  PropertyResult r = body();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// A random BSA state whose velocities satisfy the constraint of `mode`.
BsaVector randomConsistentState(Rng& rng, const BsaMode& mode, const PendulumParams& p) {
  using namespace bsa_index;
  BsaVector x;
  x.segment<2>(kQ) = randomVec<2>(rng, -1.5, 1.5);
  x.segment<2>(kPsi) = x.segment<2>(kQ) + randomVec<2>(rng, -0.2, 0.2);
  x.segment<2>(kTheta) = x.segment<2>(kPsi) + randomVec<2>(rng, -0.3, 0.3);
  x.segment<4>(kXiDot) = randomVec<4>(rng, -3.0, 3.0);
  return jump(x, mode, p).x;
}

double bsaTotalEnergy(const BsaVector& x, const PendulumParams& p) {
  using namespace bsa_index;
  return energy(x.segment<2>(kTheta), x.segment<4>(kXi), x.segment<4>(kXiDot), stiffnessMatrix(p), p).total();
}

double vsaTotalEnergy(const VsaVector& x, const PendulumParams& p) {
  using namespace vsa_index;
  return vsaEnergy(x.segment<2>(kTheta), x.segment<2>(kStiffness), x.segment<2>(kQ), x.segment<2>(kQDot), p).total();
}

// Largest entrywise deviation relative to the Jacobian's magnitude.
template <typename Functor>
double jacobianDeviation(const Functor& f, const Eigen::VectorXd& z) {
  const auto block = nlp::makeBlock(f);
  Eigen::VectorXd value;
  Eigen::MatrixXd jac;
  block->evaluate(z, value, &jac);
  Eigen::MatrixXd fd(jac.rows(), jac.cols());
  for (int i = 0; i < z.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(z(i)));
    Eigen::VectorXd zp = z, zm = z, vp, vm;
    zp(i) += h;
    zm(i) -= h;
    block->evaluate(zp, vp, nullptr);
    block->evaluate(zm, vm, nullptr);
    fd.col(i) = (vp - vm) / (2.0 * h);
  }
  double worst = 0.0;
  for (int r = 0; r < jac.rows(); ++r) {
    const double scale = std::max(1.0, jac.row(r).cwiseAbs().maxCoeff());
    worst = std::max(worst, (jac.row(r) - fd.row(r)).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

struct LinearFlow {
  static constexpr int kStates = 2;
  static constexpr int kControls = 1;
  template <typename S>
  Vec<2, S> operator()(const Vec<2, S>& x, const Vec<1, S>&) const {
    Vec<2, S> xdot;
    xdot(0) = x(1);
    xdot(1) = S(-4.0) * x(0) - S(0.4) * x(1);
    return xdot;
  }
};

// Endpoint error of the transcription with `intervals` on [0, 1].
double linearEndpointError(int intervals, CollocationPoints kind) {
  nlp::Problem nlp;
  const int T = nlp.addVariables(1);
  const StageLayout L = addCollocationStage(nlp, CollocationScheme::make(3, kind), intervals, LinearFlow{}, T);
  const Eigen::Vector2d x0(1.0, 0.0);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(nlp.numVariables());
  z(T) = 1.0;
  z.segment<2>(L.state(0, 0)) = x0;
  // The defects are linear in the states once T is fixed: one Newton step
  // over the free states solves them exactly.
  std::vector<int> free;
  for (int v = L.state(0, 0) + 2; v < L.end() + 2; ++v) free.push_back(v);
  const nlp::FirstOrder fo = nlp.firstOrder(z);
  const Eigen::SparseMatrix<double> J = fo.jacobian;
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<int> column(static_cast<std::size_t>(nlp.numVariables()), -1);
  for (std::size_t k = 0; k < free.size(); ++k) column[static_cast<std::size_t>(free[k])] = static_cast<int>(k);
  for (int c = 0; c < J.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(J, c); it; ++it) {
      const int col = column[static_cast<std::size_t>(it.col())];
      if (col >= 0) trips.emplace_back(static_cast<int>(it.row()), col, it.value());
    }
  }
  Eigen::SparseMatrix<double> Jf(J.rows(), static_cast<Eigen::Index>(free.size()));
  Jf.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Jf);
  const Eigen::VectorXd dz = lu.solve(-fo.constraints);
  for (std::size_t k = 0; k < free.size(); ++k) z(free[k]) += dz(static_cast<Eigen::Index>(k));
  Eigen::Matrix2d A;
  A << 0.0, 1.0, -4.0, -0.4;
  const Eigen::Vector2d exact = A.exp() * x0;
  return (z.segment<2>(L.end()) - exact).norm();
}

}  // namespace

PropertyResult checkImpactProjection(int cases, std::uint64_t seed, bool corrupt) {
  return timed([&] {
    Rng rng(seed);
    double residual = 0.0, energy_gain = 0.0, idempotence = 0.0;
    for (int n = 0; n < cases; ++n) {
      const Mat4 B = Mat4::NullaryExpr([&] { return uniform(rng, -1.0, 1.0); });
      const Mat4 Pi = B * B.transpose() + 0.1 * Mat4::Identity();
      const int mode = 1 + static_cast<int>(rng() % 4);
      const Eigen::MatrixXd C = constraintMatrix(mode);
      Eigen::MatrixXd Cused = C;
      if (corrupt) Cused(0, 2 + (mode % 2)) += 1e-3;
      const Vec4 v = randomVec<4>(rng, -5.0, 5.0);
      const Vec4 vp = impactMap(Pi, Cused, v).xidot_plus;
      const Vec4 vpp = impactMap(Pi, Cused, vp).xidot_plus;
      const double ke0 = 0.5 * v.dot(Pi * v), ke1 = 0.5 * vp.dot(Pi * vp);
      residual = std::max(residual, (C * vp).norm());
      energy_gain = std::max(energy_gain, (ke1 - ke0) / std::max(1.0, ke0));
      idempotence = std::max(idempotence, (vpp - vp).norm());
    }
    PropertyResult r;
    r.name = corrupt ? "impact-projection (corrupted C)" : "impact-projection";
    r.value = residual;
    r.tolerance = 1e-10;
    r.passed = residual <= 1e-10 && energy_gain <= 1e-12 && idempotence <= 1e-12;
    r.detail = fmt("%.0f cases; max |C xidot+| = %.3g", cases, residual) +
               fmt(", max kinetic energy gain %.3g, idempotence %.3g", energy_gain, idempotence);
    return r;
  });
}

PropertyResult checkPowerBalance(const PendulumParams& p, std::uint64_t seed) {
  return timed([&] {
    Rng rng(seed);
    double worst = 0.0;
    for (int n = 0; n < 1000; ++n) {
      // Motor power is spring torque times motor speed, plus the stiffness
      // adjustment term for the VSA.
      const BsaVector x = randomConsistentState(rng, BsaMode::fromIndex(1 + n % 4), p);
      const Vec2 u = randomVec<2>(rng, -2.0, 2.0);
      const PowerSample s = bsaPower(0.0, x, u, p);
      for (int j = 0; j < 2; ++j) {
        const double tau = (j == 0 ? p.k1 : p.k2) * (x(bsa_index::kTheta + j) - x(bsa_index::kPsi + j));
        worst = std::max(worst, std::abs(s.p_in(j) - tau * u(j)) / std::max(1.0, std::abs(tau * u(j))));
      }
      VsaVector xv;
      xv << randomVec<2>(rng, -1.0, 1.0), randomVec<2>(rng, 0.0, 100.0), randomVec<4>(rng, -1.0, 1.0);
      Vec4 uv;
      uv << randomVec<2>(rng, -2.0, 2.0), randomVec<2>(rng, -650.0, 650.0);
      const PowerSample sv = vsaPower(0.0, xv, uv);
      for (int j = 0; j < 2; ++j) {
        const double d = xv(vsa_index::kTheta + j) - xv(vsa_index::kQ + j);
        const double expected = xv(vsa_index::kStiffness + j) * d * uv(j) + 0.5 * uv(2 + j) * d * d;
        worst = std::max(worst, std::abs(sv.p_in(j) - expected) / std::max(1.0, std::abs(expected)));
      }
    }
    PropertyResult r;
    r.name = "power-balance";
    r.value = worst;
    r.tolerance = 1e-12;
    r.passed = worst <= r.tolerance;
    r.detail = fmt("max relative deviation of P_in from tau * u over %.0f states: %.3g", 2000.0, worst);
    return r;
  });
}

PropertyResult checkEnergyAudit(const PendulumParams& p, std::uint64_t seed) {
  return timed([&] {
    Rng rng(seed);
    // Pointwise: dE/dt along the flow equals total motor power.
    double pointwise = 0.0;
    for (int n = 0; n < 400; ++n) {
      const BsaMode mode = BsaMode::fromIndex(1 + n % 4);
      const BsaVector x = randomConsistentState(rng, mode, p);
      const Vec2 u = randomVec<2>(rng, -2.0, 2.0);
      const BsaVector f = bsaFlow<double>(x, u, mode.C, p);
      const double h = 1e-6;
      const double dE = (bsaTotalEnergy(x + h * f, p) - bsaTotalEnergy(x - h * f, p)) / (2 * h);
      const double pin = bsaPower(0.0, x, u, p).p_in.sum();
      pointwise = std::max(pointwise, std::abs(dE - pin) / std::max(1.0, std::abs(pin)));

      VsaVector xv;
      xv << randomVec<2>(rng, -1.0, 1.0), randomVec<2>(rng, 0.0, 100.0), randomVec<4>(rng, -1.0, 1.0);
      Vec4 uv;
      uv << randomVec<2>(rng, -2.0, 2.0), randomVec<2>(rng, -650.0, 650.0);
      const VsaVector fv = vsaFlow<double>(xv, uv, p);
      const double dEv = (vsaTotalEnergy(xv + h * fv, p) - vsaTotalEnergy(xv - h * fv, p)) / (2 * h);
      const double pinv = vsaPower(0.0, xv, uv).p_in.sum();
      pointwise = std::max(pointwise, std::abs(dEv - pinv) / std::max(1.0, std::abs(pinv)));
    }
    // Integrated: single-mode runs with piecewise-constant inputs.
    double integrated = 0.0;
    for (int mode = 1; mode <= 4; ++mode) {
      std::vector<double> times;
      std::vector<Eigen::VectorXd> values;
      for (int i = 0; i < 5; ++i) {
        times.push_back(0.06 * i);
        values.push_back(randomVec<2>(rng, -2.0, 2.0));
      }
      const Trajectory traj = simulateBsa(BsaVector::Zero(), InputSignal(times, values),
                                          SwitchingSignal{{{mode, 0.3}}}, p);
      const double dE = traj.back().energy.total() - traj.samples.front().energy.total();
      const double w = traj.work().netTotal();
      integrated = std::max(integrated, std::abs(dE - w) / std::max(1e-3, std::abs(w)));
    }
    PropertyResult r;
    r.name = "energy-audit";
    r.value = std::max(pointwise, integrated);
    r.tolerance = 1e-5;
    r.passed = pointwise <= 1e-5 && integrated <= 1e-5;
    r.detail = fmt("dE/dt vs P_in max rel. %.3g; E(t_f) - E(0) vs work max rel. %.3g", pointwise, integrated);
    return r;
  });
}

PropertyResult checkDerivatives(const PendulumParams& p, std::uint64_t seed) {
  return timed([&] {
    Rng rng(seed);
    double worst = 0.0;
    for (int n = 0; n < 40; ++n) {
      const BsaMode mode = BsaMode::fromIndex(1 + n % 4);
      const BsaVector x = randomConsistentState(rng, mode, p);
      Eigen::VectorXd z(13);
      z << x, randomVec<2>(rng, -2.0, 2.0), uniform(rng, 0.05, 0.2);
      worst = std::max(worst, jacobianDeviation(DefectFunctor<BsaFlowFunctor>{{mode.C, p}, 0.05}, z));
      Eigen::VectorXd zv(13);
      zv << randomVec<2>(rng, -1.0, 1.0), randomVec<2>(rng, 0.0, 100.0), randomVec<4>(rng, -1.0, 1.0),
          randomVec<2>(rng, -2.0, 2.0), randomVec<2>(rng, -650.0, 650.0), uniform(rng, 0.05, 1.0);
      worst = std::max(worst, jacobianDeviation(DefectFunctor<VsaFlowFunctor>{{p}, 0.05}, zv));
    }
    PropertyResult r;
    r.name = "ad-vs-fd";
    r.value = worst;
    r.tolerance = 1e-5;
    r.passed = worst <= r.tolerance;
    r.detail = fmt("max relative deviation of forward-mode Jacobians from central differences: %.3g", worst);
    return r;
  });
}

PropertyResult checkCollocationOrder(CollocationPoints kind, double required) {
  return timed([&] {
    double order = 1e300;
    double prev = linearEndpointError(4, kind);
    std::string detail = fmt("N=4: %.3g", prev);
    for (int n : {8, 16}) {
      const double e = linearEndpointError(n, kind);
      order = std::min(order, std::log2(prev / e));
      detail += fmt(", N=%.0f: %.3g", n, e);
      prev = e;
    }
    PropertyResult r;
    r.name = kind == CollocationPoints::Legendre ? "collocation-order-legendre" : "collocation-order-radau";
    r.value = order;
    r.tolerance = required;
    r.passed = order >= required;
    r.detail = detail + fmt(" (min observed order %.2f)", order);
    return r;
  });
}

PropertyResult checkMeshConvergence(const PendulumParams& p, int threads) {
  return timed([&] {
    ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentId::Sim1Bsa);
    cfg.pendulum = p;
    std::vector<double> speeds;
    bool converged = true;
    std::string detail;
    for (int n : {8, 16, 32}) {
      StagedOcp ocp = buildOcp(cfg, OcpModel::Bsa, OcpCost::MaxTcpVelocity, cfg.horizon);
      for (auto& s : ocp.stages) s.intervals = n;
      const auto solver = nlp::makeSolver(cfg.solver.name);
      const OcpSolution sol = solveMultistart(ocp, p, *solver, multistartGuesses(cfg, ocp), threads);
      converged = converged && sol.converged();
      speeds.push_back(sol.finalTcpSpeed(p));
      detail += std::string(detail.empty() ? "" : ", ") + fmt("N=%.0f: %.6f m/s", n, speeds.back());
    }
    const double d1 = std::abs(speeds[1] - speeds[0]), d2 = std::abs(speeds[2] - speeds[1]);
    PropertyResult r;
    r.name = "mesh-convergence";
    r.value = d2 / std::max(1e-12, speeds[2]);
    r.tolerance = 1e-2;
    r.passed = converged && d2 <= d1 + 1e-9 && r.value <= r.tolerance;
    r.detail = detail + (converged ? "" : " (a solve did not converge)");
    return r;
  });
}

PropertyResult checkModelEquivalence(const PendulumParams& p, int cases, std::uint64_t seed) {
  return timed([&] {
    Rng rng(seed);
    PendulumParams light = p;
    light.Js1 = light.Js2 = 1e-9;
    double worst = 0.0;
    int crashed = 0;
    std::string first_error;
    for (int n = 0; n < cases; ++n) {
      const Vec2 q = randomVec<2>(rng, -1.0, 1.0), qdot = randomVec<2>(rng, -2.0, 2.0);
      const Vec2 theta = q + randomVec<2>(rng, -0.3, 0.3);
      const Vec2 u = randomVec<2>(rng, -2.0, 2.0);
      BsaVector xb;
      xb << theta, q, q, qdot, qdot;
      VsaVector xv;
      xv << theta, p.k1, p.k2, q, qdot;
      Vec4 uv;
      uv << u, 0.0, 0.0;
      BsaVector b;
      VsaVector v;
      try {
        b = simulateBsa(xb, InputSignal::constant(u), SwitchingSignal{{{2, 0.5}}}, light).back().x;
        v = simulateVsa(xv, InputSignal::constant(uv), 0.5, p).back().x;
      } catch (const std::exception& e) {
        if (crashed++ == 0) first_error = e.what();
        continue;
      }
      Eigen::Matrix<double, 6, 1> diff;
      diff << b.segment<2>(bsa_index::kTheta) - v.segment<2>(vsa_index::kTheta),
          b.segment<2>(bsa_index::kQ) - v.segment<2>(vsa_index::kQ),
          b.segment<2>(bsa_index::kQDot) - v.segment<2>(vsa_index::kQDot);
      worst = std::max(worst, diff.cwiseAbs().maxCoeff());
    }
    PropertyResult r;
    r.name = "cross-model-equivalence";
    r.value = worst;
    r.tolerance = 1e-4;
    r.passed = crashed == 0 && worst <= r.tolerance;
    r.detail = fmt("%.0f initial conditions over 0.5 s; max state error %.3g", cases, worst);
    if (crashed) r.detail += fmt("; %.0f simulations failed, first: ", crashed) + first_error;
    return r;
  });
}

std::vector<PropertyResult> runVerification(const PendulumParams& p, const VerifyOptions& o) {
  std::vector<PropertyResult> out;
  out.push_back(checkImpactProjection(o.impact_cases, o.seed));
  PropertyResult neg = checkImpactProjection(1000, o.seed, true);
  neg.name = "impact-projection detects corrupted C";
  neg.passed = !neg.passed;
  out.push_back(neg);
  out.push_back(checkPowerBalance(p, o.seed));
  out.push_back(checkEnergyAudit(p, o.seed));
  out.push_back(checkDerivatives(p, o.seed));
  out.push_back(checkCollocationOrder(CollocationPoints::Legendre, 5.0));
  // Radau IIA with three points has order 5 exactly, and the estimates reach
  // it from below.
  out.push_back(checkCollocationOrder(CollocationPoints::Radau, 4.8));
  out.push_back(checkModelEquivalence(p, o.equivalence_cases, o.seed));
  if (o.include_mesh) out.push_back(checkMeshConvergence(p, o.threads));
  return out;
}

nlohmann::json toJson(const std::vector<PropertyResult>& results) {
  nlohmann::json j;
  j["schema_version"] = 1;
  nlohmann::json arr = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    arr.push_back({{"name", r.name},
                   {"passed", r.passed},
                   {"value", r.value},
                   {"tolerance", r.tolerance},
                   {"detail", r.detail},
                   {"seconds", r.seconds}});
    all = all && r.passed;
  }
  j["properties"] = arr;
  j["passed"] = all;
  return j;
}

}  // namespace bsa
