#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsa/collocation.hpp"
#include "bsa/params.hpp"

namespace bsa {

/// Outcome of one property check with its measured residual.
struct PropertyResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  int impact_cases = 10000;
  int equivalence_cases = 100;
  /// The mesh-convergence check solves three optimal control problems.
  bool include_mesh = true;
  int threads = 1;
};

/// Random (Pi SPD, mode-table C, xidot-) cases through the impact map. With
/// `corrupt` the projection uses a perturbed C while the residual is measured
/// against the true one, so the property must fail.
PropertyResult checkImpactProjection(int cases, std::uint64_t seed, bool corrupt = false);

/// p_in = p_out + es_dot at random states of both models.
PropertyResult checkPowerBalance(const PendulumParams& p, std::uint64_t seed);

/// Within one mode, the energy change equals the work of the motors.
PropertyResult checkEnergyAudit(const PendulumParams& p, std::uint64_t seed);

/// Forward-mode Jacobians of the flows against central differences, as the
/// maximum relative deviation.
PropertyResult checkDerivatives(const PendulumParams& p, std::uint64_t seed);

/// Degree-3 transcription of a linear system against its matrix exponential:
/// the smallest observed convergence order of the endpoint error over N = 4, 8, 16.
PropertyResult checkCollocationOrder(CollocationPoints kind, double required);

/// Max-velocity problem at 8, 16 and 32 intervals: successive differences of
/// the optimal speed shrink.
PropertyResult checkMeshConvergence(const PendulumParams& p, int threads);

/// SEA-SEA flow with nearly massless springs against the fixed-stiffness VSA.
PropertyResult checkModelEquivalence(const PendulumParams& p, int cases, std::uint64_t seed);

std::vector<PropertyResult> runVerification(const PendulumParams& p, const VerifyOptions& options = {});

nlohmann::json toJson(const std::vector<PropertyResult>& results);

}  // namespace bsa
