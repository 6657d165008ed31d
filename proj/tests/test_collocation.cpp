#include <cmath>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "bsa/collocation.hpp"

using namespace bsa;

namespace {

// Shifted Legendre polynomial of degree d on [0, 1] by the three-term recurrence.
double shiftedLegendre(int d, double t) {
  const double x = 2.0 * t - 1.0;
  double p0 = 1.0, p1 = x;
  if (d == 0) return p0;
  for (int k = 1; k < d; ++k) {
    const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// Root bracketing on a fine grid followed by bisection.
std::vector<double> legendreRootsByBisection(int d) {
  std::vector<double> roots;
  const int n = 19999;
  for (int i = 0; i < n; ++i) {
    double a = double(i) / n, b = double(i + 1) / n;
    double fa = shiftedLegendre(d, a), fb = shiftedLegendre(d, b);
    if (fa == 0.0) {
      roots.push_back(a);
      continue;
    }
    if (fa * fb > 0.0) continue;
    for (int k = 0; k < 200; ++k) {
      const double m = 0.5 * (a + b), fm = shiftedLegendre(d, m);
      if (fa * fm <= 0.0) {
        b = m;
      } else {
        a = m;
        fa = fm;
      }
    }
    roots.push_back(0.5 * (a + b));
  }
  return roots;
}

}  // namespace

TEST(CollocationPoints, MatchBisectionOracleForDegrees1To6) {
  for (int d = 1; d <= 6; ++d) {
    const Eigen::VectorXd tau = collocationPoints(d);
    const auto roots = legendreRootsByBisection(d);
    ASSERT_EQ(static_cast<int>(roots.size()), d);
    for (int i = 0; i < d; ++i) EXPECT_NEAR(tau(i), roots[static_cast<std::size_t>(i)], 1e-12);
  }
}

TEST(CollocationPoints, DegreeThreeValuesAndSymmetry) {
  const Eigen::VectorXd tau = collocationPoints(3);
  EXPECT_NEAR(tau(0), 0.5 - std::sqrt(15.0) / 10.0, 1e-14);
  EXPECT_NEAR(tau(1), 0.5, 1e-14);
  EXPECT_NEAR(tau(0) + tau(2), 1.0, 1e-14);
}

TEST(CollocationPoints, RadauEndsAtOne) {
  const Eigen::VectorXd tau = collocationPoints(3, CollocationPoints::Radau);
  EXPECT_NEAR(tau(0), (4.0 - std::sqrt(6.0)) / 10.0, 1e-12);
  EXPECT_NEAR(tau(1), (4.0 + std::sqrt(6.0)) / 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(tau(2), 1.0);
}

TEST(CollocationPoints, RejectsUnsupportedDegree) {
  EXPECT_THROW(collocationPoints(0), std::invalid_argument);
  EXPECT_THROW(collocationPoints(10), std::invalid_argument);
  EXPECT_THROW(parseCollocationPoints("chebyshev"), std::invalid_argument);
}

TEST(CollocationScheme, ExactForPolynomialsUpToDegree) {
  for (auto kind : {CollocationPoints::Legendre, CollocationPoints::Radau}) {
    const auto s = CollocationScheme::make(3, kind);
    EXPECT_NEAR(s.quadrature.sum(), 1.0, 1e-14);
    for (int k = 0; k <= 3; ++k) {
      Eigen::MatrixXd vals(1, 4);
      for (int r = 0; r < 4; ++r) vals(0, r) = std::pow(s.nodes(r), k);
      EXPECT_NEAR(vals.row(0).dot(s.quadrature), 1.0 / (k + 1), 1e-13);
      EXPECT_NEAR(vals.row(0).dot(s.continuity), 1.0, 1e-13);
      for (int j = 0; j < 4; ++j) {
        const double exact = k == 0 ? 0.0 : k * std::pow(s.nodes(j), k - 1);
        EXPECT_NEAR(vals.row(0).dot(s.derivative.col(j)), exact, 1e-12);
      }
      EXPECT_NEAR(s.interpolate(vals, 0.3)(0), std::pow(0.3, k), 1e-13);
    }
  }
  const auto g = CollocationScheme::make(3);
  Eigen::MatrixXd t2(1, 4);
  for (int r = 0; r < 4; ++r) t2(0, r) = g.nodes(r) * g.nodes(r);
  EXPECT_NEAR(t2.row(0).dot(g.quadrature), 1.0 / 3.0, 1e-15);
}
