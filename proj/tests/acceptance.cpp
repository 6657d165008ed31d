// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "bsa/experiment.hpp"
#include "bsa/verify.hpp"

using namespace bsa;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool passed, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", passed ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  failures += passed ? 0 : 1;
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double secondsSince(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Largest |P_in| of joint 1 once the first stage has ended.
double joint1PowerAfterSwitch(const RunReport& r) {
  const double t_switch = r.durations.front();
  double worst = 0.0;
  for (const auto& s : r.trajectory.samples) {
    if (s.t >= t_switch) worst = std::max(worst, std::abs(s.power.p_in(0)));
    if (s.t > t_switch) worst = std::max(worst, std::abs(s.power_left.p_in(0)));
  }
  return worst;
}

}  // namespace

int main() {
  const int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<const RunReport*> solved;

  // 1: maximum end-link speed with the BSA.
  auto t0 = Clock::now();
  const RunReport bsa1 = runExperiment(ExperimentConfig::defaults(ExperimentId::Sim1Bsa), {{}, threads});
  const double bsa1_seconds = secondsSince(t0);
  const double t_p = bsa1.durations.empty() ? 0.0 : bsa1.durations.front();
  report(1,
         bsa1.success && bsa1.final_speed >= 2.7 && t_p >= 0.12 && t_p <= 0.19 && bsa1_seconds <= 300.0,
         fmt("sim1-bsa v_tcp %.4f m/s (>= 2.7), T_p %.4f s (in [0.12, 0.19]), %.1f s (<= 300)", bsa1.final_speed, t_p,
             bsa1_seconds));
  solved.push_back(&bsa1);

  // 2: the VSA reaches a comparable speed.
  const RunReport vsa1 = runExperiment(ExperimentConfig::defaults(ExperimentId::Sim1Vsa), {{}, threads});
  const double gap = std::abs(vsa1.final_speed - bsa1.final_speed) / bsa1.final_speed;
  report(2, vsa1.success && gap <= 0.15,
         fmt("sim1-vsa v_tcp %.4f m/s vs bsa %.4f m/s, relative gap %.3f (<= 0.15)", vsa1.final_speed,
             bsa1.final_speed, gap));
  solved.push_back(&vsa1);

  // 3: injected energy and the idle braked motor.
  const double e_bsa = bsa1.work.netTotal(), e_vsa = vsa1.work.netTotal();
  const double p_idle = joint1PowerAfterSwitch(bsa1);
  report(3, e_bsa >= 8.0 && e_bsa <= 12.5 && e_vsa >= 8.0 && e_vsa <= 12.5 && p_idle <= 1e-6,
         fmt("net energy bsa %.3f J, vsa %.3f J (in [8, 12.5]); joint-1 max |P_in| after DEC %.2e W (<= 1e-6)", e_bsa,
             e_vsa, p_idle));

  // 4: effort-minimal runs store energy late with the BSA, oscillate with the VSA.
  const ExperimentConfig sweep_cfg = ExperimentConfig::defaults(ExperimentId::Sweep);
  const SweepReport sweep = runSweep(sweep_cfg, {{}, threads});
  bool late = sweep.allSucceeded();
  double earliest = 1.0;
  for (const auto& r : sweep.runs) {
    const double frac = r.potential_peak.time / r.horizon;
    earliest = std::min(earliest, frac);
    late = late && frac >= 0.75;
    solved.push_back(&r);
  }
  ExperimentConfig vsa2_cfg = ExperimentConfig::defaults(ExperimentId::Sim2Vsa);
  vsa2_cfg.horizon = 1.0;
  const RunReport vsa2 = runExperiment(vsa2_cfg, {{}, threads});
  solved.push_back(&vsa2);
  report(4, late && vsa2.success && vsa2.exchange_cycles >= 2,
         fmt("bsa sweep t_f 0.2..1.0: earliest E_pot peak at %.2f of horizon (>= 0.75); vsa t_f 1.0: %.0f exchange "
             "cycles (>= 2)",
             earliest, vsa2.exchange_cycles));

  // 5: clutch friction costs little speed and stores less in spring 2.
  const RunReport sim3 = runExperiment(ExperimentConfig::defaults(ExperimentId::Sim3Friction), {{}, threads});
  solved.push_back(&sim3);
  if (sim3.friction) {
    const auto& f = *sim3.friction;
    report(5, sim3.success && f.speed_ratio >= 0.85 && f.peak_spring2 < f.ideal_peak_spring2,
           fmt("sim3 v_tcp %.4f m/s = %.3f of ideal (>= 0.85); E_s2 peak %.3f J < ideal %.3f J", f.speed, f.speed_ratio,
               f.peak_spring2, f.ideal_peak_spring2));
  } else {
    report(5, false, "sim3 produced no friction comparison: " + sim3.message);
  }

  // 6: impact map on random cases.
  const PropertyResult impact = checkImpactProjection(10000, 2024);
  report(6, impact.passed, impact.detail);

  // 7: SEA-SEA with vanishing spring inertia against the VSA.
  const PendulumParams p;
  const PropertyResult equiv = checkModelEquivalence(p, 100, 2024);
  report(7, equiv.passed && equiv.value <= 1e-4, equiv.detail);

  // 8: transcription order, derivatives, and independent re-simulation.
  const PropertyResult order = checkCollocationOrder(CollocationPoints::Legendre, 5.0);
  const PropertyResult ad = checkDerivatives(p, 2024);
  double worst_resim = 0.0;
  int converged = 0;
  for (const RunReport* r : solved) {
    if (!r->solution || !r->solution->converged()) continue;
    ++converged;
    worst_resim = std::max(worst_resim, r->resimulation.relative_speed_deviation);
  }
  report(8, order.passed && ad.passed && ad.value <= 1e-5 && worst_resim <= 0.02 && converged > 0,
         fmt("collocation order %.2f (>= 5); AD vs FD %.2e (<= 1e-5); worst re-simulation speed deviation %.2e over "
             "%.0f converged solutions (<= 0.02)",
             order.value, ad.value, worst_resim, converged));

  std::printf("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
