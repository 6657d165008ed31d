#include "bsa/ocp.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <random>
#include <stdexcept>
#include <thread>

namespace bsa {

std::string toString(OcpModel m) { return m == OcpModel::Bsa ? "bsa" : "vsa"; }
std::string toString(OcpCost c) { return c == OcpCost::MaxTcpVelocity ? "max-tcp-velocity" : "min-effort"; }

OcpModel parseOcpModel(const std::string& s) {
  if (s == "bsa") return OcpModel::Bsa;
  if (s == "vsa") return OcpModel::Vsa;
  throw std::invalid_argument("unknown model '" + s + "'");
}

OcpCost parseOcpCost(const std::string& s) {
  if (s == "max-tcp-velocity") return OcpCost::MaxTcpVelocity;
  if (s == "min-effort") return OcpCost::MinEffort;
  throw std::invalid_argument("unknown cost '" + s + "'");
}

GuessStrategy parseGuessStrategy(const std::string& s) {
  if (s == "zero-hold") return GuessStrategy::ZeroHold;
  if (s == "forward-sim") return GuessStrategy::ForwardSim;
  throw std::invalid_argument("unknown initial guess strategy '" + s + "'");
}

bool StagedOcp::idleMotor(int stage, int joint) const {
  if (model != OcpModel::Bsa) return false;
  for (std::size_t s = static_cast<std::size_t>(stage); s < stages.size(); ++s) {
    const BsaMode m = BsaMode::fromIndex(stages[s].mode);
    if (joint == 0 ? m.c1 : m.c2) return false;
  }
  return true;
}

void StagedOcp::validate(const PendulumParams& p) const {
  if (stages.empty()) throw std::invalid_argument("problem has no stages");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(min_stage_fraction > 0.0) || min_stage_fraction * static_cast<double>(stages.size()) > 1.0) {
    throw std::invalid_argument("minimum stage fraction incompatible with the stage count");
  }
  if (model == OcpModel::Vsa && stages.size() != 1) throw std::invalid_argument("the VSA problem has a single stage");
  for (const auto& s : stages) {
    if (s.intervals < 1) throw std::invalid_argument("each stage needs at least one interval");
    if (model == OcpModel::Bsa && (s.mode < 1 || s.mode > 4)) {
      throw std::invalid_argument("BSA stage mode must be in 1..4");
    }
  }
  if (!(u_theta_max > 0.0)) throw std::invalid_argument("motor velocity bound must be positive");
  if (input_regularization < 0.0) throw std::invalid_argument("input regularization must be nonnegative");
  if (vsa.k_min > vsa.k_max || !(vsa.u_k_max > 0.0)) throw std::invalid_argument("inconsistent VSA limits");
  if (terminal_speed && !(*terminal_speed >= 0.0)) throw std::invalid_argument("terminal speed must be nonnegative");
  if (x0.size() != stateSize()) throw std::invalid_argument("initial state has the wrong size");
  if (model == OcpModel::Bsa) {
    const Vec2 r = constraintResidual(BsaVector(x0), BsaMode::fromIndex(stages.front().mode));
    if (r.norm() > 1e-9) throw std::invalid_argument("initial state violates the first mode's constraint");
  } else {
    const Vec2 k = x0.segment<2>(vsa_index::kStiffness);
    if ((k.array() < vsa.k_min).any() || (k.array() > vsa.k_max).any()) {
      throw std::invalid_argument("initial stiffness outside its bounds");
    }
  }
  (void)p;
}

namespace {

struct JumpLinkFunctor {
  static constexpr int kInputs = 2 * bsa_index::kStateSize;
  static constexpr int kOutputs = bsa_index::kStateSize;
  ConstraintMatrix C;
  PendulumParams p;
  template <typename S>
  Vec<kOutputs, S> operator()(const Vec<kInputs, S>& z) const {
    const Vec<kOutputs, S> before = z.template head<kOutputs>();
    const Vec<kOutputs, S> after = z.template tail<kOutputs>();
    return after - bsaJump<S>(before, C, p);
  }
};

// (q, qdot) -> +-||J(q) qdot||^2 - offset.
struct SpeedSquaredFunctor {
  static constexpr int kInputs = 4;
  static constexpr int kOutputs = 1;
  PendulumParams p;
  double sign;
  double offset;
  template <typename S>
  Vec<1, S> operator()(const Vec<4, S>& z) const {
    const Vec<2, S> q = z.template head<2>();
    const Vec<2, S> qd = z.template tail<2>();
    return Vec<1, S>(S(sign) * tcpSpeedSquared<S>(q, qd, p) - S(offset));
  }
};

// (u, T) -> h T sum_k w_k u_k^2.
template <int NU>
struct EffortFunctor {
  static constexpr int kInputs = NU + 1;
  static constexpr int kOutputs = 1;
  double h;
  Vec<NU> w;
  template <typename S>
  Vec<1, S> operator()(const Vec<kInputs, S>& z) const {
    S sum(0.0);
    for (int k = 0; k < NU; ++k) sum += S(w(k)) * z(k) * z(k);
    return Vec<1, S>(S(h) * z(NU) * sum);
  }
};

template <int NU>
std::shared_ptr<const nlp::BlockFunction> effortBlock(double h, const Eigen::VectorXd& w) {
  return nlp::makeBlock(EffortFunctor<NU>{h, Vec<NU>(w)});
}

int qIndex(OcpModel m) { return m == OcpModel::Bsa ? bsa_index::kQ : vsa_index::kQ; }
int qdotIndex(OcpModel m) { return m == OcpModel::Bsa ? bsa_index::kQDot : vsa_index::kQDot; }

std::vector<int> speedVars(int end, OcpModel m) {
  const int q = end + qIndex(m), qd = end + qdotIndex(m);
  return {q, q + 1, qd, qd + 1};
}

}  // namespace

Eigen::VectorXd effortWeights(const StagedOcp& ocp) {
  Eigen::VectorXd w(ocp.inputSize());
  for (int k = 0; k < w.size(); ++k) {
    const double bound = k < 2 ? ocp.u_theta_max : ocp.vsa.u_k_max;
    w(k) = 1.0 / (bound * bound);
  }
  return w;
}

Transcription transcribe(const StagedOcp& ocp, const PendulumParams& p) {
  ocp.validate(p);
  Transcription tr;
  tr.scheme = CollocationScheme::make(ocp.degree, ocp.points);
  auto& nlp = tr.nlp;
  const int P = static_cast<int>(ocp.stages.size());
  const int nx = ocp.stateSize(), nu = ocp.inputSize();

  // With one stage the horizon equality fixes T, and an upper bound would be
  // active together with it.
  const double T_max = P == 1 ? nlp::kInf : ocp.horizon;
  const int first_T = nlp.addVariables(P, ocp.min_stage_fraction * ocp.horizon, T_max);
  for (int s = 0; s < P; ++s) {
    const OcpStage& st = ocp.stages[static_cast<std::size_t>(s)];
    StageLayout L;
    if (ocp.model == OcpModel::Bsa) {
      L = addCollocationStage(nlp, tr.scheme, st.intervals, BsaFlowFunctor{constraintMatrix(st.mode), p},
                              first_T + s);
    } else {
      L = addCollocationStage(nlp, tr.scheme, st.intervals, VsaFlowFunctor{p}, first_T + s);
    }
    tr.stages.push_back(L);

    // Input bounds.
    for (int i = 0; i < L.intervals; ++i) {
      for (int k = 0; k < 2; ++k) nlp.setBounds(L.input(i) + k, -ocp.u_theta_max, ocp.u_theta_max);
      if (ocp.model == OcpModel::Vsa) {
        for (int k = 2; k < 4; ++k) nlp.setBounds(L.input(i) + k, -ocp.vsa.u_k_max, ocp.vsa.u_k_max);
      }
    }
    // A motor whose spring stays braked and decoupled until the end cannot
    // influence the links or the cost; its input is fixed to zero.
    if (ocp.model == OcpModel::Bsa) {
      for (int j = 0; j < 2; ++j) {
        if (!ocp.idleMotor(s, j)) continue;
        for (int i = 0; i < L.intervals; ++i) {
          const int row = nlp.addConstraints(1);
          nlp.addLinear(row, L.input(i) + j, 1.0);
        }
      }
    }
    // Stiffness is linear within an interval under a held rate, so bounding the
    // interval boundaries bounds it everywhere. Bounding interior nodes too
    // would make the active bounds dependent wherever k rests at a limit.
    if (ocp.model == OcpModel::Vsa) {
      for (int i = 0; i < L.intervals; ++i) {
        for (int k = 2; k < 4; ++k) nlp.setScale(L.input(i) + k, ocp.vsa.u_k_max);
      }
      for (int i = 0; i <= L.intervals; ++i) {
        for (int r = 0; r <= (i < L.intervals ? L.degree : 0); ++r) {
          const int base = i < L.intervals ? L.state(i, r) : L.end();
          for (int k = 0; k < 2; ++k) {
            const bool fixed_elsewhere = i == 0 && (s > 0 || !ocp.free_initial_stiffness);
            if (r == 0 && !fixed_elsewhere) {
              nlp.setBounds(base + vsa_index::kStiffness + k, ocp.vsa.k_min, ocp.vsa.k_max);
            }
            nlp.setScale(base + vsa_index::kStiffness + k, std::max(1.0, ocp.vsa.k_max));
          }
        }
      }
    }
  }

  // Initial state.
  const int start = tr.stages.front().state(0, 0);
  for (int k = 0; k < nx; ++k) {
    if (ocp.model == OcpModel::Vsa && ocp.free_initial_stiffness &&
        (k == vsa_index::kStiffness || k == vsa_index::kStiffness + 1)) {
      continue;
    }
    const int row = nlp.addConstraints(1);
    nlp.addLinear(row, start + k, 1.0);
    nlp.addConstant(row, -ocp.x0(k));
  }

  // Stage linking.
  for (int s = 0; s + 1 < P; ++s) {
    const int before = tr.stages[static_cast<std::size_t>(s)].end();
    const int after = tr.stages[static_cast<std::size_t>(s + 1)].state(0, 0);
    const int row = nlp.addConstraints(nx);
    if (ocp.model == OcpModel::Bsa) {
      std::vector<int> vars;
      for (int k = 0; k < nx; ++k) vars.push_back(before + k);
      for (int k = 0; k < nx; ++k) vars.push_back(after + k);
      const ConstraintMatrix C = constraintMatrix(ocp.stages[static_cast<std::size_t>(s + 1)].mode);
      nlp.addBlock(nlp::makeBlock(JumpLinkFunctor{C, p}), std::move(vars), row);
    } else {
      for (int k = 0; k < nx; ++k) {
        nlp.addLinear(row + k, after + k, 1.0);
        nlp.addLinear(row + k, before + k, -1.0);
      }
    }
    ++tr.linking_blocks;
  }

  // Fixed horizon.
  const int hrow = nlp.addConstraints(1);
  for (int s = 0; s < P; ++s) nlp.addLinear(hrow, first_T + s, 1.0);
  nlp.addConstant(hrow, -ocp.horizon);

  const int end = tr.stages.back().end();
  if (ocp.terminal_speed) {
    const int row = nlp.addConstraints(1);
    const double v = *ocp.terminal_speed;
    nlp.addBlock(nlp::makeBlock(SpeedSquaredFunctor{p, 1.0, v * v}), speedVars(end, ocp.model), row);
  }

  // Inputs enter the effort normalized by their bounds.
  Eigen::VectorXd weights = effortWeights(ocp);
  if (ocp.cost == OcpCost::MaxTcpVelocity) {
    nlp.addObjectiveBlock(nlp::makeBlock(SpeedSquaredFunctor{p, -1.0, 0.0}), speedVars(end, ocp.model));
    weights *= ocp.input_regularization;
  }
  if (ocp.cost == OcpCost::MinEffort || ocp.input_regularization > 0.0) {
    for (int s = 0; s < P; ++s) {
      const StageLayout& L = tr.stages[static_cast<std::size_t>(s)];
      const double h = 1.0 / L.intervals;
      const auto block = nu == 2 ? effortBlock<2>(h, weights) : effortBlock<4>(h, weights);
      for (int i = 0; i < L.intervals; ++i) {
        std::vector<int> vars;
        for (int k = 0; k < nu; ++k) vars.push_back(L.input(i) + k);
        vars.push_back(L.duration);
        nlp.addObjectiveBlock(block, std::move(vars));
      }
    }
  }
  return tr;
}

double costMaxVelocity(const Eigen::VectorXd& x_final, OcpModel model, const PendulumParams& p) {
  const Vec2 q = x_final.segment<2>(qIndex(model));
  const Vec2 qd = x_final.segment<2>(qdotIndex(model));
  return -tcpSpeedSquared<double>(q, qd, p);
}

double costMinEffort(const std::vector<double>& durations, const std::vector<Eigen::VectorXd>& inputs,
                     const Eigen::VectorXd& weights) {
  if (durations.size() != inputs.size()) throw std::invalid_argument("durations and inputs differ in length");
  double J = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    J += durations[i] * (weights.size() ? inputs[i].cwiseAbs2().dot(weights) : inputs[i].squaredNorm());
  }
  return J;
}

namespace {

Eigen::VectorXd flowOf(const StagedOcp& ocp, int mode, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                       const PendulumParams& p) {
  if (ocp.model == OcpModel::Bsa) {
    return bsaFlow<double>(BsaVector(x), Vec2(u), constraintMatrix(mode), p);
  }
  return vsaFlow<double>(VsaVector(x), Vec<4>(u), p);
}

Eigen::VectorXd rk4(const StagedOcp& ocp, int mode, Eigen::VectorXd x, const Eigen::VectorXd& u, double dt,
                    int steps, const PendulumParams& p) {
  const double h = dt / steps;
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd k1 = flowOf(ocp, mode, x, u, p);
    const Eigen::VectorXd k2 = flowOf(ocp, mode, x + 0.5 * h * k1, u, p);
    const Eigen::VectorXd k3 = flowOf(ocp, mode, x + 0.5 * h * k2, u, p);
    const Eigen::VectorXd k4 = flowOf(ocp, mode, x + h * k3, u, p);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

}  // namespace

Eigen::VectorXd initialGuess(const Transcription& tr, const StagedOcp& ocp, const PendulumParams& p,
                             const InitialGuessOptions& o) {
  const int P = static_cast<int>(ocp.stages.size());
  const int nx = ocp.stateSize(), nu = ocp.inputSize();
  std::vector<double> T = o.durations;
  if (T.empty()) T.assign(static_cast<std::size_t>(P), ocp.horizon / P);
  if (static_cast<int>(T.size()) != P) throw std::invalid_argument("guess durations do not match the stage count");

  Eigen::VectorXd z = Eigen::VectorXd::Zero(tr.nlp.numVariables());
  std::mt19937 rng(o.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Eigen::VectorXd& tau = tr.scheme.nodes;

  Eigen::VectorXd x = ocp.x0;
  double t0 = 0.0;
  for (int s = 0; s < P; ++s) {
    const StageLayout& L = tr.stages[static_cast<std::size_t>(s)];
    const int mode = ocp.stages[static_cast<std::size_t>(s)].mode;
    const double Ts = T[static_cast<std::size_t>(s)];
    z(L.duration) = Ts;
    if (s > 0 && ocp.model == OcpModel::Bsa && o.strategy == GuessStrategy::ForwardSim) {
      x = bsaJump<double>(BsaVector(x), constraintMatrix(mode), p);
    }
    const double h = Ts / L.intervals;
    for (int i = 0; i < L.intervals; ++i) {
      Eigen::VectorXd u = Eigen::VectorXd::Zero(nu);
      const double ti = t0 + i * h;
      if (o.strategy == GuessStrategy::ForwardSim) {
        if (o.profile) {
          u = o.profile(ti + 0.5 * h);
        } else if (static_cast<int>(o.stage_inputs.size()) > s) {
          u = o.stage_inputs[static_cast<std::size_t>(s)];
        }
      }
      if (u.size() != nu) throw std::invalid_argument("guess input has the wrong size");
      for (int k = 0; k < nu; ++k) {
        const double bound = k < 2 ? ocp.u_theta_max : ocp.vsa.u_k_max;
        u(k) = std::clamp(u(k) + o.input_perturbation * bound * unit(rng), -bound, bound);
      }
      z.segment(L.input(i), nu) = u;
      z.segment(L.state(i, 0), nx) = x;
      for (int r = 1; r <= L.degree; ++r) {
        if (o.strategy == GuessStrategy::ForwardSim) {
          const Eigen::VectorXd xr = rk4(ocp, mode, x, u, (tau(r) - (r == 1 ? 0.0 : tau(r - 1))) * h, 8, p);
          z.segment(L.state(i, r), nx) = xr;
          x = xr;
        } else {
          z.segment(L.state(i, r), nx) = x;
        }
      }
      if (o.strategy == GuessStrategy::ForwardSim) {
        x = rk4(ocp, mode, x, u, (1.0 - tau(L.degree)) * h, 8, p);
        if (ocp.model == OcpModel::Vsa) {
          for (int k = 0; k < 2; ++k) {
            x(vsa_index::kStiffness + k) = std::clamp(x(vsa_index::kStiffness + k), ocp.vsa.k_min, ocp.vsa.k_max);
          }
        }
      }
    }
    z.segment(L.end(), nx) = x;
    t0 += Ts;
  }
  return z;
}

double OcpSolution::finalTcpSpeed(const PendulumParams& p) const {
  return std::sqrt(-costMaxVelocity(finalState(), model, p));
}

std::vector<double> OcpSolution::durations() const {
  std::vector<double> T;
  for (const auto& s : stages) T.push_back(s.duration);
  return T;
}

InputSignal OcpSolution::inputSignal() const {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;
  for (const auto& s : stages) {
    for (std::size_t i = 0; i < s.inputs.size(); ++i) {
      times.push_back(s.input_times[i]);
      values.push_back(model == OcpModel::Bsa ? Eigen::VectorXd(s.inputs[i].head(2)) : s.inputs[i]);
    }
  }
  return InputSignal(std::move(times), std::move(values));
}

SwitchingSignal OcpSolution::switching() const {
  SwitchingSignal sigma;
  for (const auto& s : stages) sigma.stages.push_back({s.mode, s.duration});
  return sigma;
}

OcpSolution extractSolution(const Transcription& tr, const StagedOcp& ocp, const PendulumParams& p,
                            const nlp::SolverResult& result) {
  OcpSolution sol;
  sol.model = ocp.model;
  sol.status = result.status;
  sol.message = result.message;
  sol.iterations = result.iterations;
  sol.primal_infeasibility = result.primal_infeasibility;
  sol.dual_infeasibility = result.dual_infeasibility;
  sol.decision = result.x;
  sol.cost = result.objective;
  const Eigen::VectorXd& z = result.x;
  const int nx = ocp.stateSize(), nu = ocp.inputSize();

  double t0 = 0.0;
  for (std::size_t s = 0; s < tr.stages.size(); ++s) {
    const StageLayout& L = tr.stages[s];
    OcpStageSolution st;
    st.mode = ocp.model == OcpModel::Bsa ? ocp.stages[s].mode : 0;
    st.start = t0;
    st.duration = z(L.duration);
    const double h = st.duration / L.intervals;
    for (int i = 0; i < L.intervals; ++i) {
      st.input_times.push_back(t0 + i * h);
      st.inputs.push_back(z.segment(L.input(i), nu));
      for (int r = 0; r <= L.degree; ++r) {
        st.node_times.push_back(t0 + (i + tr.scheme.nodes(r)) * h);
        st.node_states.push_back(z.segment(L.state(i, r), nx));
      }
    }
    st.x_end = z.segment(L.end(), nx);
    st.node_times.push_back(t0 + st.duration);
    st.node_states.push_back(st.x_end);
    t0 += st.duration;
    sol.stages.push_back(std::move(st));
  }
  const Eigen::VectorXd c = tr.nlp.constraints(z);
  sol.max_defect = c.size() ? c.lpNorm<Eigen::Infinity>() : 0.0;
  (void)p;
  return sol;
}

OcpSolution solve(const StagedOcp& ocp, const PendulumParams& p, const nlp::SolverInterface& solver,
                  const InitialGuessOptions& guess) {
  const auto start = std::chrono::steady_clock::now();
  const Transcription tr = transcribe(ocp, p);
  const Eigen::VectorXd z0 = initialGuess(tr, ocp, p, guess);
  const nlp::SolverResult res = solver.solve(tr.nlp, z0);
  OcpSolution sol = extractSolution(tr, ocp, p, res);
  sol.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  sol.converged_starts = sol.converged() ? 1 : 0;
  return sol;
}

OcpSolution solveMultistart(const StagedOcp& ocp, const PendulumParams& p, const nlp::SolverInterface& solver,
                            const std::vector<InitialGuessOptions>& guesses, int threads) {
  if (guesses.empty()) throw std::invalid_argument("multistart needs at least one guess");
  std::vector<OcpSolution> runs(guesses.size());
  std::vector<std::exception_ptr> errors(guesses.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < guesses.size(); i = next++) {
      try {
        runs[i] = solve(ocp, p, solver, guesses[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::clamp(threads, 1, static_cast<int>(guesses.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Reduction in guess order keeps the result independent of scheduling.
  const OcpSolution* best = nullptr;
  double total = 0.0;
  int converged = 0;
  for (const auto& s : runs) {
    total += s.solve_seconds;
    converged += s.converged();
    if (s.converged() && (!best || s.cost < best->cost)) best = &s;
  }
  OcpSolution out = best ? *best : runs.back();
  out.solve_seconds = total;
  out.starts = static_cast<int>(runs.size());
  out.converged_starts = converged;
  return out;
}

Trajectory replay(const OcpSolution& sol, const PendulumParams& p, const IntegratorConfig& cfg) {
  const double horizon = sol.stages.back().start + sol.stages.back().duration;
  if (sol.model == OcpModel::Bsa) {
    BsaVector x0 = sol.initialState();
    // Remove the (tiny) constraint residual left by the solver.
    x0 = bsaJump<double>(x0, constraintMatrix(sol.stages.front().mode), p);
    return simulateBsa(x0, sol.inputSignal(), sol.switching(), p, cfg);
  }
  VsaVector x0 = sol.initialState();
  for (int k = 0; k < 2; ++k) x0(vsa_index::kStiffness + k) = std::max(0.0, x0(vsa_index::kStiffness + k));
  return simulateVsa(x0, sol.inputSignal(), horizon, p, cfg);
}

ResimulationReport resimulateCheck(const OcpSolution& sol, const PendulumParams& p, const IntegratorConfig& cfg) {
  const Trajectory traj = replay(sol, p, cfg);
  ResimulationReport rep;
  std::size_t k = 0;
  auto stateAt = [&](double t) -> const Eigen::VectorXd* {
    while (k < traj.samples.size() && traj.samples[k].t < t - 1e-9) ++k;
    if (k < traj.samples.size() && std::abs(traj.samples[k].t - t) <= 1e-9) return &traj.samples[k].x;
    return nullptr;
  };
  for (const auto& st : sol.stages) {
    const int d1 = static_cast<int>(st.node_states.size() - 1) / static_cast<int>(st.inputs.size());
    for (std::size_t i = 0; i < st.inputs.size(); ++i) {
      const auto* x = stateAt(st.node_times[i * static_cast<std::size_t>(d1)]);
      if (x) rep.max_state_deviation = std::max(rep.max_state_deviation,
                                                (*x - st.node_states[i * static_cast<std::size_t>(d1)]).lpNorm<Eigen::Infinity>());
    }
  }
  rep.max_state_deviation =
      std::max(rep.max_state_deviation, (traj.back().x - sol.finalState()).lpNorm<Eigen::Infinity>());
  rep.predicted_speed = sol.finalTcpSpeed(p);
  rep.simulated_speed = traj.finalTcpSpeed();
  rep.relative_speed_deviation =
      std::abs(rep.simulated_speed - rep.predicted_speed) / std::max(1e-12, std::abs(rep.predicted_speed));
  if (rep.predicted_speed == 0.0) rep.relative_speed_deviation = std::abs(rep.simulated_speed);
  return rep;
}

}  // namespace bsa
