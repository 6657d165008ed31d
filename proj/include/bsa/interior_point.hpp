#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bsa/nlp.hpp"

namespace bsa::nlp {

enum class SolverStatus {
  Optimal,
  Acceptable,
  MaxIterations,
  RestorationFailed,
  Infeasible,
  NumericalError,
};

std::string toString(SolverStatus s);
bool converged(SolverStatus s);

struct SolverOptions {
  double tol = 1e-8;
  double acceptable_tol = 1e-6;
  int acceptable_iterations = 15;
  double constraint_tolerance = 1e-8;
  double acceptable_constraint_tolerance = 1e-6;
  /// A failed line search ends with Acceptable instead of restoration when
  /// the scaled optimality error is below this and the point is acceptably feasible.
  double stall_tolerance = 1e-4;
  int max_iterations = 3000;
  double mu_init = 0.1;
  double bound_push = 1e-2;
  double bound_relax = 1e-8;
  double max_gradient_scale = 100.0;
  bool verbose = false;
};

struct IterationRecord {
  int iteration;
  double objective;
  double primal_infeasibility;
  double dual_infeasibility;
  double mu;
  double alpha_primal;
  double regularization;
  bool restoration;
};

struct SolverResult {
  SolverStatus status = SolverStatus::NumericalError;
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;
  Eigen::VectorXd z_lower, z_upper;
  double objective = 0.0;
  int iterations = 0;
  /// Unscaled max |c(x)|.
  double primal_infeasibility = 0.0;
  /// Scaled max |grad L| as used for termination.
  double dual_infeasibility = 0.0;
  double complementarity = 0.0;
  std::vector<IterationRecord> log;
  std::string message;
};

class SolverInterface {
 public:
  virtual ~SolverInterface() = default;
  virtual std::string name() const = 0;
  virtual SolverResult solve(const Problem& problem, const Eigen::VectorXd& x0) const = 0;
};

/// Primal-dual barrier method with filter line search.
class InteriorPointSolver final : public SolverInterface {
 public:
  explicit InteriorPointSolver(SolverOptions options = {}) : options_(options) {}
  std::string name() const override { return "ipm"; }
  SolverResult solve(const Problem& problem, const Eigen::VectorXd& x0) const override;
  const SolverOptions& options() const { return options_; }

 private:
  SolverOptions options_;
};

/// Known names: "ipm". Throws std::invalid_argument otherwise.
std::unique_ptr<SolverInterface> makeSolver(const std::string& name, SolverOptions options = {});
std::vector<std::string> solverNames();

}  // namespace bsa::nlp
