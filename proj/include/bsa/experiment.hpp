#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bsa/config.hpp"
#include "bsa/ocp.hpp"
#include "bsa/simulate.hpp"

namespace bsa {

struct RunOptions {
  /// Artifact directory; nothing is written when empty.
  std::filesystem::path out;
  /// Worker threads for multistart solves and sweeps.
  int threads = 1;
};

/// Largest value of a per-sample energy and when it occurs.
struct EnergyPeak {
  double value = 0.0;
  double time = 0.0;
};

/// Peak of the total potential energy (springs plus gravity).
EnergyPeak potentialPeak(const Trajectory& traj);
/// Peak of the elastic energy stored in spring `joint` (0 or 1).
EnergyPeak springEnergyPeak(const Trajectory& traj, int joint);

/// Completed potential -> kinetic exchange cycles: rises of the total
/// potential energy by at least `fraction` of its range that are followed by
/// a fall of the same size.
int exchangeCycles(const Trajectory& traj, double fraction = 0.1);

struct FrictionComparison {
  double ideal_switch_time = 0.0;
  double command_time = 0.0;
  double ideal_speed = 0.0;
  double speed = 0.0;
  double speed_ratio = 0.0;
  double ideal_peak_spring2 = 0.0;
  double peak_spring2 = 0.0;
  double friction_loss = 0.0;
  int stick_slip_events = 0;
};

struct RunReport {
  std::string experiment;
  std::string model;
  std::string config_hash;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  bool success = false;
  std::string status;
  std::string message;

  /// End-link speed of the independent replay, and the optimizer's value.
  double final_speed = 0.0;
  double predicted_speed = 0.0;
  std::vector<int> modes;
  std::vector<double> durations;
  double cost = 0.0;
  int iterations = 0;
  int starts = 0;
  int converged_starts = 0;
  double max_defect = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  ResimulationReport resimulation;

  WorkSummary work;
  EnergyPeak potential_peak;
  int exchange_cycles = 0;
  std::optional<FrictionComparison> friction;
  std::vector<TrajectoryEvent> events;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;

  // Not serialized.
  Trajectory trajectory;
  std::optional<OcpSolution> solution;
};

struct SweepReport {
  std::string config_hash;
  std::vector<RunReport> runs;
  bool allSucceeded() const;
};

/// Optimal control problem of an experiment at the given horizon.
StagedOcp buildOcp(const ExperimentConfig& cfg, OcpModel model, OcpCost cost, double horizon);

/// Deterministic multistart guesses (config seed) for a problem.
std::vector<InitialGuessOptions> multistartGuesses(const ExperimentConfig& cfg, const StagedOcp& ocp);

/// Runs one experiment and writes its artifacts when options.out is set.
/// Throws ConfigError for a sweep config; use runSweep.
RunReport runExperiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Effort-minimal runs over cfg.horizons, concurrently; each run writes into
/// out/tf_<horizon>/ and the combined energy traces go to out/sweep_energy.csv.
SweepReport runSweep(const ExperimentConfig& cfg, const RunOptions& options = {});

}  // namespace bsa
