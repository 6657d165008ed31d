#include "bsa/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "bsa/dynamics.hpp"
#include "bsa/report.hpp"
#include "bsa/svg.hpp"

namespace bsa {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

nlp::SolverOptions solverOptions(const SolverSettings& s) {
  nlp::SolverOptions o;
  o.tol = s.tol;
  o.acceptable_tol = s.acceptable_tol;
  o.max_iterations = s.max_iterations;
  o.verbose = s.verbose;
  return o;
}

bool isDec(int mode, int joint) {
  const bool dec1 = mode == 1 || mode == 3;
  const bool dec2 = mode == 1 || mode == 4;
  return joint == 0 ? dec1 : dec2;
}

template <typename F>
EnergyPeak peakOf(const Trajectory& traj, F value) {
  EnergyPeak peak;
  bool first = true;
  for (const auto& s : traj.samples) {
    const double v = value(s);
    if (first || v > peak.value) {
      peak = {v, s.t};
      first = false;
    }
  }
  return peak;
}

void fillFromSolution(RunReport& r, const OcpSolution& sol, const PendulumParams& p) {
  r.status = nlp::toString(sol.status);
  r.message = sol.message;
  r.success = sol.converged();
  r.predicted_speed = sol.finalTcpSpeed(p);
  r.durations = sol.durations();
  r.modes.clear();
  if (sol.model == OcpModel::Bsa) {
    for (const auto& st : sol.stages) r.modes.push_back(st.mode);
  }
  r.cost = sol.cost;
  r.iterations = sol.iterations;
  r.starts = sol.starts;
  r.converged_starts = sol.converged_starts;
  r.max_defect = sol.max_defect;
  r.primal_infeasibility = sol.primal_infeasibility;
  r.dual_infeasibility = sol.dual_infeasibility;
}

void fillFromTrajectory(RunReport& r, Trajectory traj) {
  r.final_speed = traj.finalTcpSpeed();
  r.work = traj.work();
  r.potential_peak = potentialPeak(traj);
  r.exchange_cycles = exchangeCycles(traj);
  r.events = traj.events;
  r.warnings.insert(r.warnings.end(), traj.warnings.begin(), traj.warnings.end());
  r.trajectory = std::move(traj);
}

// Optimizes, replays and audits one problem.
RunReport solveRun(const ExperimentConfig& cfg, OcpModel model, OcpCost cost, double horizon, int threads) {
  RunReport r;
  r.experiment = toString(cfg.experiment);
  r.model = toString(model);
  r.config_hash = cfg.hash();
  r.seed = cfg.seed;
  r.horizon = horizon;

  const StagedOcp ocp = buildOcp(cfg, model, cost, horizon);
  const auto solver = nlp::makeSolver(cfg.solver.name, solverOptions(cfg.solver));
  OcpSolution sol = solveMultistart(ocp, cfg.pendulum, *solver, multistartGuesses(cfg, ocp), threads);
  fillFromSolution(r, sol, cfg.pendulum);
  try {
    fillFromTrajectory(r, replay(sol, cfg.pendulum, cfg.integrator));
    r.resimulation = resimulateCheck(sol, cfg.pendulum, cfg.integrator);
  } catch (const std::exception& e) {
    r.success = false;
    r.message += std::string(r.message.empty() ? "" : "; ") + "replay failed: " + e.what();
  }
  r.solution = std::move(sol);
  return r;
}

std::string csvLine(std::initializer_list<double> values) {
  std::string s;
  for (double v : values) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    s += (s.empty() ? "" : ",") + std::string(buf);
  }
  return s;
}

void writePlots(const std::filesystem::path& dir, const RunReport& r, const PendulumParams& p,
                const Trajectory* ideal) {
  const Trajectory& traj = r.trajectory;
  if (traj.samples.empty()) return;
  svg::Series v{"v_tcp", {}, {}}, ek{"E_kin", {}, {}}, ep{"E_pot", {}, {}}, es1{"E_spring_1", {}, {}},
      es2{"E_spring_2", {}, {}}, p1{"P_in_1", {}, {}}, p2{"P_in_2", {}, {}};
  for (const auto& s : traj.samples) {
    v.x.push_back(s.t);
    v.y.push_back(s.v_tcp);
    ek.x.push_back(s.t);
    ek.y.push_back(s.energy.kinetic());
    ep.x.push_back(s.t);
    ep.y.push_back(s.energy.potential());
    es1.x.push_back(s.t);
    es1.y.push_back(s.energy.potential_spring(0));
    es2.x.push_back(s.t);
    es2.y.push_back(s.energy.potential_spring(1));
    p1.x.push_back(s.t);
    p1.y.push_back(s.power.p_in(0));
    p2.x.push_back(s.t);
    p2.y.push_back(s.power.p_in(1));
  }
  std::vector<svg::Series> energy = {ek, ep, es1, es2};
  std::vector<svg::Series> speed = {v};
  if (ideal) {
    svg::Series iv{"v_tcp ideal", {}, {}}, ies2{"E_spring_2 ideal", {}, {}};
    for (const auto& s : ideal->samples) {
      iv.x.push_back(s.t);
      iv.y.push_back(s.v_tcp);
      ies2.x.push_back(s.t);
      ies2.y.push_back(s.energy.potential_spring(1));
    }
    speed.push_back(iv);
    energy.push_back(ies2);
  }
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name);
    out << text;
  };
  write("v_tcp.svg", svg::lineChart(r.experiment + ": end-link speed", "t [s]", "v_tcp [m/s]", speed));
  write("energy.svg", svg::lineChart(r.experiment + ": energy", "t [s]", "E [J]", energy));
  write("power.svg", svg::lineChart(r.experiment + ": motor power", "t [s]", "P_in [W]", {p1, p2}));

  std::vector<svg::Pose> poses;
  const int q0 = traj.model == ModelKind::Vsa ? vsa_index::kQ : bsa_index::kQ;
  const int frames = 12;
  std::size_t i = 0;
  for (int f = 0; f < frames; ++f) {
    const double t = r.horizon * f / (frames - 1);
    while (i + 1 < traj.samples.size() && traj.samples[i].t < t) ++i;
    const Vec2 q = traj.samples[i].x.segment<2>(q0);
    const Vec2 tip = tcpPosition<double>(q, p);
    poses.push_back({traj.samples[i].t, {p.l1 * std::sin(q(0)), -p.l1 * std::cos(q(0))}, {tip(0), tip(1)}});
  }
  write("sketch.svg", svg::sketch(r.experiment + ": motion", poses));
}

void writeArtifacts(const std::filesystem::path& dir, const RunReport& r, const PendulumParams& p,
                    const Trajectory* ideal = nullptr) {
  std::filesystem::create_directories(dir);
  writeJson(dir / "summary.json", toJson(r));
  if (r.solution) writeJson(dir / "solution.json", toJson(*r.solution));
  if (r.solution) writeInputsCsv(dir / "inputs.csv", *r.solution);
  if (r.trajectory.samples.empty()) return;
  writeTrajectoryCsv(dir / "trajectory.csv", r.trajectory);
  writePowerCsv(dir / "power.csv", r.trajectory);
  writeEnergyCsv(dir / "energy.csv", r.trajectory);
  writeEventsCsv(dir / "events.csv", r.trajectory);
  writeSketchCsv(dir / "sketch.csv", r.trajectory, p);
  if (ideal) {
    writeTrajectoryCsv(dir / "ideal_trajectory.csv", *ideal);
    writeEnergyCsv(dir / "ideal_energy.csv", *ideal);
  }
  writePlots(dir, r, p, ideal);
}

std::string horizonDir(double tf) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "tf_%.2f", tf);
  return buf;
}

}  // namespace

EnergyPeak potentialPeak(const Trajectory& traj) {
  return peakOf(traj, [](const TrajectorySample& s) { return s.energy.potential(); });
}

EnergyPeak springEnergyPeak(const Trajectory& traj, int joint) {
  return peakOf(traj, [joint](const TrajectorySample& s) { return s.energy.potential_spring(joint); });
}

int exchangeCycles(const Trajectory& traj, double fraction) {
  if (traj.samples.empty()) return 0;
  double lo = traj.samples.front().energy.potential(), hi = lo;
  for (const auto& s : traj.samples) {
    lo = std::min(lo, s.energy.potential());
    hi = std::max(hi, s.energy.potential());
  }
  const double delta = fraction * (hi - lo);
  if (!(delta > 0.0)) return 0;
  // Hysteresis: a cycle is a rise by delta from the running minimum followed
  // by a fall by delta from the running maximum.
  int cycles = 0;
  bool rising = true;
  double extreme = traj.samples.front().energy.potential();
  for (const auto& s : traj.samples) {
    const double e = s.energy.potential();
    if (rising) {
      extreme = std::min(extreme, e);
      if (e >= extreme + delta) {
        rising = false;
        extreme = e;
      }
    } else {
      extreme = std::max(extreme, e);
      if (e <= extreme - delta) {
        ++cycles;
        rising = true;
        extreme = e;
      }
    }
  }
  return cycles;
}

bool SweepReport::allSucceeded() const {
  return !runs.empty() && std::all_of(runs.begin(), runs.end(), [](const RunReport& r) { return r.success; });
}

StagedOcp buildOcp(const ExperimentConfig& cfg, OcpModel model, OcpCost cost, double horizon) {
  StagedOcp ocp;
  ocp.model = model;
  ocp.cost = cost;
  ocp.horizon = horizon;
  const int n = cfg.intervalsFor(model);
  if (model == OcpModel::Bsa) {
    for (int m : cfg.ocp.modes) ocp.stages.push_back({m, n});
    ocp.x0 = Eigen::VectorXd::Zero(bsa_index::kStateSize);
  } else {
    ocp.stages = {{0, n}};
    ocp.x0 = Eigen::VectorXd::Zero(vsa_index::kStateSize);
    ocp.x0(vsa_index::kStiffness) = ocp.x0(vsa_index::kStiffness + 1) = cfg.ocp.initial_stiffness;
  }
  ocp.min_stage_fraction = cfg.ocp.min_stage_fraction;
  ocp.u_theta_max = cfg.u_theta_max;
  ocp.vsa = cfg.vsa;
  ocp.vsa.u_theta_max = cfg.u_theta_max;
  ocp.free_initial_stiffness = cfg.ocp.free_initial_stiffness;
  ocp.input_regularization = cfg.ocp.input_regularization;
  ocp.degree = cfg.ocp.degree;
  ocp.points = cfg.ocp.points;
  if (cost == OcpCost::MinEffort) ocp.terminal_speed = cfg.ocp.terminal_speed;
  return ocp;
}

std::vector<InitialGuessOptions> multistartGuesses(const ExperimentConfig& cfg, const StagedOcp& ocp) {
  std::vector<InitialGuessOptions> out;
  const double h = ocp.horizon;
  const double umax = ocp.u_theta_max;
  static constexpr double kAmplitude[] = {1.0, 0.5, 0.75, 0.25};
  static constexpr double kLastStage[] = {1.0, 0.7, 1.4, 1.0};
  for (int k = 0; k < cfg.ocp.starts; ++k) {
    InitialGuessOptions g;
    g.strategy = cfg.ocp.guess;
    g.seed = static_cast<unsigned>(cfg.seed * 7919 + static_cast<std::uint64_t>(k));
    g.input_perturbation = k == 0 ? 0.0 : cfg.ocp.guess_perturbation;
    const double a = kAmplitude[k % 4] * umax;
    if (ocp.model == OcpModel::Bsa) {
      // Wind up, then release: the last stage is short, every earlier stage
      // shares the rest. A joint that becomes decoupled after the first stage
      // holds its motor still.
      const int P = static_cast<int>(ocp.stages.size());
      if (P > 1) {
        const double last = std::min(0.25 * h, 0.05) * kLastStage[k % 4];
        g.durations.assign(static_cast<std::size_t>(P - 1), (h - last) / (P - 1));
        g.durations.push_back(last);
      }
      for (int s = 0; s < P; ++s) {
        Eigen::Vector2d u;
        for (int j = 0; j < 2; ++j) u(j) = s > 0 && isDec(ocp.stages[static_cast<std::size_t>(s)].mode, j) ? 0.0 : a;
        g.stage_inputs.push_back(u);
      }
    } else {
      // Oscillating motors while the stiffness ramps to about 2/3 of its bound.
      const double period = ocp.cost == OcpCost::MinEffort ? 0.35 * (1.0 + 0.3 * k) : h / (k + 1);
      const double omega = 2.0 * M_PI / period;
      const double ramp = 0.65 * ocp.vsa.k_max / ocp.vsa.u_k_max;
      const double rate = ocp.vsa.u_k_max;
      const double amp = umax;
      const double phase = k % 2 ? 0.5 : 0.0;
      g.profile = [omega, ramp, rate, amp, phase](double t) {
        Eigen::VectorXd u(4);
        u << amp * std::cos(omega * t), amp * std::cos(omega * t + phase), t < ramp ? rate : 0.0,
            t < ramp ? rate : 0.0;
        return u;
      };
    }
    out.push_back(std::move(g));
  }
  return out;
}

RunReport runExperiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const auto start = Clock::now();
  const int threads = std::max(1, options.threads);
  RunReport r;
  const Trajectory* ideal = nullptr;
  Trajectory ideal_traj;
  switch (cfg.experiment) {
    case ExperimentId::Sim1Bsa:
      r = solveRun(cfg, OcpModel::Bsa, OcpCost::MaxTcpVelocity, cfg.horizon, threads);
      break;
    case ExperimentId::Sim1Vsa:
      r = solveRun(cfg, OcpModel::Vsa, OcpCost::MaxTcpVelocity, cfg.horizon, threads);
      break;
    case ExperimentId::Sim2Bsa:
      r = solveRun(cfg, OcpModel::Bsa, OcpCost::MinEffort, cfg.horizon, threads);
      break;
    case ExperimentId::Sim2Vsa:
      r = solveRun(cfg, OcpModel::Vsa, OcpCost::MinEffort, cfg.horizon, threads);
      break;
    case ExperimentId::Sim3Friction: {
      r = solveRun(cfg, OcpModel::Bsa, OcpCost::MaxTcpVelocity, cfg.horizon, threads);
      r.model = "friction";
      if (!r.success || !r.solution) {
        r.message = "ideal solution unavailable: " + r.message;
        break;
      }
      ideal_traj = std::move(r.trajectory);
      ideal = &ideal_traj;
      const OcpSolution& sol = *r.solution;
      FrictionComparison f;
      f.ideal_switch_time = sol.stages.front().duration;
      f.command_time = f.ideal_switch_time - cfg.clutch.advance;
      f.ideal_speed = ideal_traj.finalTcpSpeed();
      f.ideal_peak_spring2 = springEnergyPeak(ideal_traj, 1).value;
      const ClutchCommands commands = ClutchCommands::fromSwitching(
          sol.switching(), cfg.clutch.advance, cfg.clutch.m_max, cfg.clutch.t_connect, cfg.clutch.t_separate);
      FrictionParams fp;
      fp.static_ratio = cfg.clutch.static_ratio;
      r.warnings.clear();
      try {
        Trajectory traj = simulateFriction(BsaVector::Zero(), sol.inputSignal(), commands, cfg.horizon, cfg.pendulum,
                                           fp, cfg.integrator);
        f.speed = traj.finalTcpSpeed();
        f.speed_ratio = f.ideal_speed > 0.0 ? f.speed / f.ideal_speed : 0.0;
        f.peak_spring2 = springEnergyPeak(traj, 1).value;
        f.friction_loss = traj.frictionLoss();
        f.stick_slip_events = static_cast<int>(std::count_if(traj.events.begin(), traj.events.end(), [](const auto& e) {
          return e.kind == EventKind::Stick || e.kind == EventKind::Slip;
        }));
        fillFromTrajectory(r, std::move(traj));
      } catch (const std::exception& e) {
        r.success = false;
        r.message = std::string("friction simulation failed: ") + e.what();
      }
      r.friction = f;
      break;
    }
    case ExperimentId::Sweep:
      throw ConfigError("experiment", "a sweep config runs through runSweep");
  }
  r.wall_seconds = seconds(start);
  if (!options.out.empty()) writeArtifacts(options.out, r, cfg.pendulum, ideal);
  return r;
}

SweepReport runSweep(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.horizons.empty()) throw ConfigError("sweep.horizons", "needs at least one horizon");
  const auto sweep_start = Clock::now();
  SweepReport report;
  report.config_hash = cfg.hash();
  report.runs.resize(cfg.horizons.size());
  std::vector<std::string> errors(cfg.horizons.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.horizons.size(); i = next++) {
      const auto start = Clock::now();
      RunReport& r = report.runs[i];
      try {
        r = solveRun(cfg, cfg.sweep_model, OcpCost::MinEffort, cfg.horizons[i], 1);
      } catch (const std::exception& e) {
        r.experiment = toString(cfg.experiment);
        r.model = toString(cfg.sweep_model);
        r.config_hash = cfg.hash();
        r.horizon = cfg.horizons[i];
        r.status = "error";
        r.message = e.what();
      }
      r.wall_seconds = seconds(start);
      if (!options.out.empty()) writeArtifacts(options.out / horizonDir(cfg.horizons[i]), r, cfg.pendulum);
    }
  };
  const int n = std::clamp(options.threads, 1, static_cast<int>(cfg.horizons.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (!options.out.empty()) {
    std::filesystem::create_directories(options.out);
    std::ofstream csv(options.out / "sweep_energy.csv");
    const auto cols = sweepEnergyColumns();
    for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
    csv << '\n';
    std::vector<svg::Series> series;
    for (const auto& r : report.runs) {
      svg::Series s{horizonDir(r.horizon), {}, {}};
      for (const auto& smp : r.trajectory.samples) {
        csv << csvLine({r.horizon, smp.t, smp.energy.kinetic(), smp.energy.potential(), smp.v_tcp}) << '\n';
        s.x.push_back(smp.t / r.horizon);
        s.y.push_back(smp.energy.potential());
      }
      series.push_back(std::move(s));
    }
    std::ofstream plot(options.out / "sweep_energy.svg");
    plot << svg::lineChart("potential energy over normalized time", "t / t_f", "E_pot [J]", series);

    nlohmann::json j;
    j["schema_version"] = 1;
    j["experiment"] = "sweep";
    j["model"] = toString(cfg.sweep_model);
    j["config_hash"] = report.config_hash;
    j["seed"] = cfg.seed;
    j["success"] = report.allSucceeded();
    j["status"] = report.allSucceeded() ? "ok" : "partial-failure";
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : report.runs) runs.push_back(toJson(r, false));
    j["runs"] = runs;
    j["timing"] = {{"wall_seconds", seconds(sweep_start)}};
    writeJson(options.out / "summary.json", j);
  }
  return report;
}

}  // namespace bsa
