#pragma once

#include <string>

#include <Eigen/Dense>

namespace bsa {

enum class CollocationPoints { Legendre, Radau };

CollocationPoints parseCollocationPoints(const std::string& name);

/// Collocation nodes in (0, 1]: roots of the shifted Legendre polynomial of the
/// given degree (Gauss), or the right Radau IIA nodes. Throws
/// std::invalid_argument for degree < 1 or > 9.
Eigen::VectorXd collocationPoints(int degree, CollocationPoints kind = CollocationPoints::Legendre);

/// Lagrange basis on {0, tau_1..tau_d} and its derived coefficients.
///   derivative(r, j): derivative of basis r at node j (j = 0..d)
///   continuity(r):    basis r evaluated at tau = 1
///   quadrature(r):    integral of basis r over [0, 1]
struct CollocationScheme {
  int degree = 3;
  CollocationPoints kind = CollocationPoints::Legendre;
  Eigen::VectorXd nodes;  // size d + 1, nodes(0) = 0
  Eigen::MatrixXd derivative;
  Eigen::VectorXd continuity;
  Eigen::VectorXd quadrature;

  static CollocationScheme make(int degree = 3, CollocationPoints kind = CollocationPoints::Legendre);

  /// Value at tau in [0, 1] of the polynomial through the given node values
  /// (one column per node).
  Eigen::VectorXd interpolate(const Eigen::MatrixXd& node_values, double tau) const;
};

}  // namespace bsa
