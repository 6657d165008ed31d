#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bsa/collocation.hpp"
#include "bsa/hybrid.hpp"
#include "bsa/interior_point.hpp"
#include "bsa/nlp.hpp"
#include "bsa/simulate.hpp"
#include "bsa/vsa.hpp"

namespace bsa {

// Flows in the form the collocation helper expects: fixed state/control sizes
// and a scalar-templated right-hand side.
struct BsaFlowFunctor {
  static constexpr int kStates = bsa_index::kStateSize;
  static constexpr int kControls = bsa_index::kInputSize;
  ConstraintMatrix C;
  PendulumParams p;
  template <typename S>
  Vec<kStates, S> operator()(const Vec<kStates, S>& x, const Vec<kControls, S>& u) const {
    return bsaFlow<S>(x, u, C, p);
  }
};

struct VsaFlowFunctor {
  static constexpr int kStates = vsa_index::kStateSize;
  static constexpr int kControls = vsa_index::kInputSize;
  PendulumParams p;
  template <typename S>
  Vec<kStates, S> operator()(const Vec<kStates, S>& x, const Vec<kControls, S>& u) const {
    return vsaFlow<S>(x, u, p);
  }
};

/// Collocation defect contribution scale * T * f(x, u) over z = (x, u, T).
template <typename Flow>
struct DefectFunctor {
  static constexpr int kInputs = Flow::kStates + Flow::kControls + 1;
  static constexpr int kOutputs = Flow::kStates;
  Flow flow;
  double scale;
  template <typename S>
  Vec<kOutputs, S> operator()(const Vec<kInputs, S>& z) const {
    const Vec<Flow::kStates, S> x = z.template head<Flow::kStates>();
    const Vec<Flow::kControls, S> u = z.template segment<Flow::kControls>(Flow::kStates);
    return (S(scale) * z(kInputs - 1)) * flow(x, u);
  }
};

/// Variable indices of one collocation stage: states X(i, r) for interval i and
/// node r = 0..d, one held input per interval, the end state and the duration.
struct StageLayout {
  int intervals = 0;
  int degree = 0;
  int nx = 0;
  int nu = 0;
  int first_state = 0;
  int first_input = 0;
  int duration = 0;
  int first_defect_row = 0;

  int state(int interval, int node) const { return first_state + (interval * (degree + 1) + node) * nx; }
  int end() const { return first_state + intervals * (degree + 1) * nx; }
  int input(int interval) const { return first_input + interval * nu; }
};

/// Adds states, inputs, defect and continuity constraints of one stage on
/// normalized time s in [0, 1] with dynamics dx/ds = T f(x, u).
template <typename Flow>
StageLayout addCollocationStage(nlp::Problem& nlp, const CollocationScheme& scheme, int intervals, const Flow& flow,
                                int duration_var) {
  constexpr int nx = Flow::kStates;
  constexpr int nu = Flow::kControls;
  const int d = scheme.degree;
  StageLayout L;
  L.intervals = intervals;
  L.degree = d;
  L.nx = nx;
  L.nu = nu;
  L.duration = duration_var;
  L.first_state = nlp.addVariables(intervals * (d + 1) * nx + nx);
  L.first_input = nlp.addVariables(intervals * nu);
  const double h = 1.0 / intervals;
  const auto block = nlp::makeBlock(DefectFunctor<Flow>{flow, -h});
  L.first_defect_row = nlp.numConstraints();
  for (int i = 0; i < intervals; ++i) {
    for (int j = 1; j <= d; ++j) {
      const int row = nlp.addConstraints(nx);
      for (int r = 0; r <= d; ++r) {
        const double c = scheme.derivative(r, j);
        if (c == 0.0) continue;
        for (int k = 0; k < nx; ++k) nlp.addLinear(row + k, L.state(i, r) + k, c);
      }
      std::vector<int> vars;
      for (int k = 0; k < nx; ++k) vars.push_back(L.state(i, j) + k);
      for (int k = 0; k < nu; ++k) vars.push_back(L.input(i) + k);
      vars.push_back(duration_var);
      nlp.addBlock(block, std::move(vars), row);
    }
    const int row = nlp.addConstraints(nx);
    const int next = i + 1 < intervals ? L.state(i + 1, 0) : L.end();
    for (int k = 0; k < nx; ++k) {
      nlp.addLinear(row + k, next + k, -1.0);
      for (int r = 0; r <= d; ++r) nlp.addLinear(row + k, L.state(i, r) + k, scheme.continuity(r));
    }
  }
  return L;
}

enum class OcpModel { Bsa, Vsa };
enum class OcpCost { MaxTcpVelocity, MinEffort };
std::string toString(OcpModel m);
std::string toString(OcpCost c);
OcpModel parseOcpModel(const std::string& s);
OcpCost parseOcpCost(const std::string& s);

struct OcpStage {
  /// BSA mode index 1..4; ignored for the VSA.
  int mode = 2;
  int intervals = 20;
};

/// Fixed-horizon multi-stage optimal control problem.
struct StagedOcp {
  OcpModel model = OcpModel::Bsa;
  std::vector<OcpStage> stages;
  OcpCost cost = OcpCost::MaxTcpVelocity;
  double horizon = 0.2;
  /// Stage durations are bounded to [fraction * horizon, horizon].
  double min_stage_fraction = 0.01;
  /// Terminal end-link speed equality ||v(t_f)|| = value.
  std::optional<double> terminal_speed;
  double u_theta_max = 2.0;
  VsaLimits vsa;
  /// VSA only: the initial stiffness is a decision variable within its bounds
  /// instead of being fixed to x0.
  bool free_initial_stiffness = false;
  /// Max-velocity cost only: adds eps * sum h T ||u / u_max||^2, which keeps
  /// inputs that the terminal cost does not see (singular arcs) determined.
  double input_regularization = 1e-6;
  Eigen::VectorXd x0;
  int degree = 3;
  CollocationPoints points = CollocationPoints::Legendre;

  int stateSize() const { return model == OcpModel::Bsa ? bsa_index::kStateSize : vsa_index::kStateSize; }
  int inputSize() const { return model == OcpModel::Bsa ? bsa_index::kInputSize : vsa_index::kInputSize; }
  /// Throws std::invalid_argument on malformed problems.
  void validate(const PendulumParams& p) const;
  /// BSA joint that is decoupled (DEC) from `stage` to the end. Its motor
  /// input is constrained to zero.
  bool idleMotor(int stage, int joint) const;
};

/// NLP together with the variable layout needed to build guesses and read
/// solutions back.
struct Transcription {
  nlp::Problem nlp;
  CollocationScheme scheme;
  std::vector<StageLayout> stages;
  /// Number of jump/continuity blocks linking consecutive stages.
  int linking_blocks = 0;
};

Transcription transcribe(const StagedOcp& ocp, const PendulumParams& p);

/// -||v_TCP||^2 at the final state; zero at rest.
double costMaxVelocity(const Eigen::VectorXd& x_final, OcpModel model, const PendulumParams& p);
/// Sum over held inputs of duration * sum_k w_k u_k^2 (unit weights when empty).
double costMinEffort(const std::vector<double>& durations, const std::vector<Eigen::VectorXd>& inputs,
                     const Eigen::VectorXd& weights = {});
/// Effort weights 1 / u_max^2 per input.
Eigen::VectorXd effortWeights(const StagedOcp& ocp);

enum class GuessStrategy { ZeroHold, ForwardSim };
GuessStrategy parseGuessStrategy(const std::string& s);

struct InitialGuessOptions {
  GuessStrategy strategy = GuessStrategy::ZeroHold;
  /// Stage durations; uniform split when empty.
  std::vector<double> durations;
  /// Forward-sim: constant input per stage, unless `profile` is set.
  std::vector<Eigen::VectorXd> stage_inputs;
  std::function<Eigen::VectorXd(double)> profile;
  /// Uniform random perturbation amplitude added to the held inputs.
  double input_perturbation = 0.0;
  unsigned seed = 0;
};

Eigen::VectorXd initialGuess(const Transcription& tr, const StagedOcp& ocp, const PendulumParams& p,
                             const InitialGuessOptions& options);

struct OcpStageSolution {
  int mode = 0;
  double start = 0.0;
  double duration = 0.0;
  /// Absolute node times and states, interval by interval, then the end state.
  std::vector<double> node_times;
  std::vector<Eigen::VectorXd> node_states;
  /// Held input per interval and the interval start times.
  std::vector<double> input_times;
  std::vector<Eigen::VectorXd> inputs;
  Eigen::VectorXd x_end;
};

struct OcpSolution {
  OcpModel model = OcpModel::Bsa;
  std::vector<OcpStageSolution> stages;
  double cost = 0.0;
  nlp::SolverStatus status = nlp::SolverStatus::NumericalError;
  std::string message;
  int iterations = 0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double max_defect = 0.0;
  double solve_seconds = 0.0;
  /// Multistart bookkeeping.
  int starts = 1;
  int converged_starts = 0;
  Eigen::VectorXd decision;

  bool converged() const { return nlp::converged(status); }
  Eigen::VectorXd initialState() const { return stages.front().node_states.front(); }
  Eigen::VectorXd finalState() const { return stages.back().x_end; }
  double finalTcpSpeed(const PendulumParams& p) const;
  std::vector<double> durations() const;
  /// Zero-order-hold replay of the optimized inputs. For the BSA only the
  /// motor velocities are returned.
  InputSignal inputSignal() const;
  SwitchingSignal switching() const;
};

OcpSolution extractSolution(const Transcription& tr, const StagedOcp& ocp, const PendulumParams& p,
                            const nlp::SolverResult& result);

OcpSolution solve(const StagedOcp& ocp, const PendulumParams& p, const nlp::SolverInterface& solver,
                  const InitialGuessOptions& guess);

/// Solves from each guess, `threads` at a time, and keeps the best converged
/// result (lowest cost, earliest guess on ties), or the last run when none
/// converges.
OcpSolution solveMultistart(const StagedOcp& ocp, const PendulumParams& p, const nlp::SolverInterface& solver,
                            const std::vector<InitialGuessOptions>& guesses, int threads = 1);

struct ResimulationReport {
  double max_state_deviation = 0.0;
  double predicted_speed = 0.0;
  double simulated_speed = 0.0;
  double relative_speed_deviation = 0.0;
};

/// Integrates the solution's inputs and schedule independently and compares
/// with the collocation states at interval boundaries.
ResimulationReport resimulateCheck(const OcpSolution& sol, const PendulumParams& p, const IntegratorConfig& cfg = {});

/// Replays a solution through the ideal simulator.
Trajectory replay(const OcpSolution& sol, const PendulumParams& p, const IntegratorConfig& cfg = {});

}  // namespace bsa
