#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bsa/collocation.hpp"
#include "bsa/ocp.hpp"
#include "bsa/params.hpp"
#include "bsa/simulate.hpp"
#include "bsa/vsa.hpp"

namespace bsa {

inline constexpr int kConfigSchemaVersion = 1;

enum class ExperimentId { Sim1Bsa, Sim1Vsa, Sim2Bsa, Sim2Vsa, Sim3Friction, Sweep };
std::string toString(ExperimentId id);
/// Throws ConfigError for unknown names.
ExperimentId parseExperimentId(const std::string& s);

struct OcpSettings {
  /// BSA mode sequence, one collocation stage per entry.
  std::vector<int> modes = {4, 3};
  /// Intervals per stage; 0 picks the experiment default.
  int intervals = 0;
  int degree = 3;
  CollocationPoints points = CollocationPoints::Legendre;
  double min_stage_fraction = 0.01;
  /// Terminal speed of the effort-minimal problems [m/s].
  double terminal_speed = 3.0;
  double initial_stiffness = 0.0;
  bool free_initial_stiffness = false;
  double input_regularization = 1e-6;
  /// Multistart: number of initial guesses.
  int starts = 4;
  GuessStrategy guess = GuessStrategy::ForwardSim;
  double guess_perturbation = 0.05;
};

struct SolverSettings {
  std::string name = "ipm";
  double tol = 1e-8;
  double acceptable_tol = 1e-6;
  int max_iterations = 3000;
  bool verbose = false;
};

struct ClutchSettings {
  double m_max = 30.0;
  double t_connect = 0.02;
  double t_separate = 0.02;
  /// Clutch commands lead the ideal switching times by this much [s].
  double advance = 0.01;
  double static_ratio = 1.0;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  ExperimentId experiment = ExperimentId::Sim1Bsa;
  PendulumParams pendulum;
  double u_theta_max = 2.0;
  VsaLimits vsa;
  double horizon = 0.2;
  /// Sweep only.
  std::vector<double> horizons;
  OcpModel sweep_model = OcpModel::Bsa;
  OcpSettings ocp;
  ClutchSettings clutch;
  IntegratorConfig integrator;
  SolverSettings solver;
  /// Output directory; empty means the front end decides.
  std::string output;
  std::uint64_t seed = 0;

  static ExperimentConfig defaults(ExperimentId id);

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// Intervals per stage after resolving the 0 = default rule for `model`.
  int intervalsFor(OcpModel model) const;
  /// Every setting as sorted `section.key = value` lines, full precision.
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), hex.
  std::string hash() const;
};

/// INI text: top-level `schema_version`, `experiment`, `seed`, `output`, then
/// sections [pendulum] [bounds] [ocp] [sweep] [clutch] [integrator] [solver].
/// Unknown sections or keys, duplicates and malformed values throw ConfigError.
ExperimentConfig parseConfig(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig loadConfig(const std::filesystem::path& path);

/// Commented template listing every key with its default for `id`.
std::string configTemplate(ExperimentId id);

/// INI text that parses back to `c`.
std::string toIni(const ExperimentConfig& c, bool comments = true);

}  // namespace bsa
