#include "bsa/collocation.hpp"

#include <algorithm>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/Polynomials>

namespace bsa {

CollocationPoints parseCollocationPoints(const std::string& name) {
  if (name == "legendre" || name == "gauss") return CollocationPoints::Legendre;
  if (name == "radau") return CollocationPoints::Radau;
  throw std::invalid_argument("unknown collocation points '" + name + "'");
}

namespace {

// Golub-Welsch: Gauss nodes are the eigenvalues of the Jacobi matrix of the
// Legendre recurrence.
Eigen::VectorXd gaussNodes(int d) {
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(d, d);
  for (int k = 1; k < d; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    T(k, k - 1) = b;
    T(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  return (es.eigenvalues().array() + 1.0) / 2.0;
}

// Monomial coefficients (ascending) of the Legendre polynomial P_n on [-1, 1].
Eigen::VectorXd legendreCoefficients(int n) {
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(n + 1), p1 = Eigen::VectorXd::Zero(n + 1);
  p0(0) = 1.0;
  if (n == 0) return p0;
  p1(1) = 1.0;
  for (int k = 1; k < n; ++k) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n + 1);
    for (int i = 0; i < n; ++i) next(i + 1) += (2.0 * k + 1.0) * p1(i);
    next -= k * p0;
    next /= (k + 1.0);
    p0 = p1;
    p1 = next;
  }
  return p1;
}

// Radau IIA nodes: roots of P_d(s) - P_{d-1}(s) mapped from s in (-1, 1] to (0, 1].
Eigen::VectorXd radauNodes(int d) {
  Eigen::VectorXd poly = legendreCoefficients(d);
  poly.head(d) -= legendreCoefficients(d - 1);
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
  solver.compute(poly);
  std::vector<double> roots;
  solver.realRoots(roots, 1e-8);
  std::sort(roots.begin(), roots.end());
  Eigen::VectorXd out(d);
  for (int k = 0; k < d; ++k) out(k) = (roots.at(static_cast<std::size_t>(k)) + 1.0) / 2.0;
  out(d - 1) = 1.0;
  return out;
}

}  // namespace

Eigen::VectorXd collocationPoints(int degree, CollocationPoints kind) {
  if (degree < 1 || degree > 9) throw std::invalid_argument("collocation degree must be in 1..9");
  return kind == CollocationPoints::Legendre ? gaussNodes(degree) : radauNodes(degree);
}

CollocationScheme CollocationScheme::make(int degree, CollocationPoints kind) {
  CollocationScheme s;
  s.degree = degree;
  s.kind = kind;
  const int n = degree + 1;
  s.nodes.resize(n);
  s.nodes(0) = 0.0;
  s.nodes.tail(degree) = collocationPoints(degree, kind);

  s.derivative.resize(n, n);
  s.continuity.resize(n);
  s.quadrature.resize(n);
  for (int r = 0; r < n; ++r) {
    // Lagrange basis r as a polynomial in ascending monomial coefficients.
    Eigen::VectorXd basis = Eigen::VectorXd::Zero(n);
    basis(0) = 1.0;
    for (int m = 0; m < n; ++m) {
      if (m == r) continue;
      const double denom = s.nodes(r) - s.nodes(m);
      Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
      for (int i = 0; i + 1 < n; ++i) {
        next(i + 1) += basis(i) / denom;
        next(i) -= basis(i) * s.nodes(m) / denom;
      }
      basis = next;
    }
    s.continuity(r) = basis.sum();
    double integral = 0.0;
    for (int i = 0; i < n; ++i) integral += basis(i) / (i + 1.0);
    s.quadrature(r) = integral;
    for (int j = 0; j < n; ++j) {
      double dv = 0.0, tp = 1.0;
      for (int i = 1; i < n; ++i) {
        dv += i * basis(i) * tp;
        tp *= s.nodes(j);
      }
      s.derivative(r, j) = dv;
    }
  }
  return s;
}

Eigen::VectorXd CollocationScheme::interpolate(const Eigen::MatrixXd& node_values, double tau) const {
  const int n = degree + 1;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(node_values.rows());
  for (int r = 0; r < n; ++r) {
    double l = 1.0;
    for (int m = 0; m < n; ++m) {
      if (m != r) l *= (tau - nodes(m)) / (nodes(r) - nodes(m));
    }
    out += l * node_values.col(r);
  }
  return out;
}

}  // namespace bsa
