#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bsa/interior_point.hpp"
#include "bsa/nlp.hpp"

using namespace bsa;
using namespace bsa::nlp;

namespace {

struct Trig {
  static constexpr int kInputs = 3;
  static constexpr int kOutputs = 2;
  template <typename S>
  Vec<2, S> operator()(const Vec<3, S>& z) const {
    using std::cos;
    using std::exp;
    using std::sin;
    Vec<2, S> out;
    out(0) = sin(z(0)) * z(1) + exp(z(2) * z(0));
    out(1) = z(1) * z(1) * cos(z(2)) / (S(2.0) + z(0) * z(0));
    return out;
  }
};

struct Square {
  static constexpr int kInputs = 1;
  static constexpr int kOutputs = 1;
  template <typename S>
  Vec<1, S> operator()(const Vec<1, S>& z) const {
    return Vec<1, S>(z(0) * z(0));
  }
};

struct Rosenbrock {
  static constexpr int kInputs = 2;
  static constexpr int kOutputs = 1;
  template <typename S>
  Vec<1, S> operator()(const Vec<2, S>& z) const {
    const S a = S(1.0) - z(0);
    const S b = z(1) - z(0) * z(0);
    return Vec<1, S>(a * a + S(100.0) * b * b);
  }
};

// Hock-Schittkowski 71 objective and equality x.x = 40.
struct Hs71Objective {
  static constexpr int kInputs = 4;
  static constexpr int kOutputs = 1;
  template <typename S>
  Vec<1, S> operator()(const Vec<4, S>& x) const {
    return Vec<1, S>(x(0) * x(3) * (x(0) + x(1) + x(2)) + x(2));
  }
};

struct Hs71Sphere {
  static constexpr int kInputs = 4;
  static constexpr int kOutputs = 1;
  template <typename S>
  Vec<1, S> operator()(const Vec<4, S>& x) const {
    return Vec<1, S>(x.squaredNorm() - S(40.0));
  }
};

struct Hs71Product {
  static constexpr int kInputs = 5;
  static constexpr int kOutputs = 1;
  template <typename S>
  Vec<1, S> operator()(const Vec<5, S>& z) const {
    return Vec<1, S>(z(0) * z(1) * z(2) * z(3) - S(25.0) - z(4));
  }
};

}  // namespace

TEST(AutoDiffBlock, JacobianMatchesCentralDifferences) {
  AutoDiffBlock<Trig> block{Trig{}};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd z(3);
    for (int i = 0; i < 3; ++i) z(i) = dist(rng);
    Eigen::VectorXd v;
    Eigen::MatrixXd J;
    block.evaluate(z, v, &J);
    for (int i = 0; i < 3; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(z(i)));
      Eigen::VectorXd zp = z, zm = z, vp, vm;
      zp(i) += h;
      zm(i) -= h;
      block.evaluate(zp, vp, nullptr);
      block.evaluate(zm, vm, nullptr);
      const Eigen::VectorXd fd = (vp - vm) / (2 * h);
      for (int r = 0; r < 2; ++r) EXPECT_NEAR(J(r, i), fd(r), 1e-5 * std::max(1.0, std::abs(fd(r))));
    }
  }
}

TEST(AutoDiffBlock, HessianMatchesDifferencedJacobian) {
  AutoDiffBlock<Trig> block{Trig{}};
  Eigen::VectorXd z(3), w(2);
  z << 0.3, -0.7, 0.4;
  w << 1.5, -0.25;
  Eigen::MatrixXd H;
  block.hessian(z, w, H);
  EXPECT_LT((H - H.transpose()).norm(), 1e-12);
  for (int i = 0; i < 3; ++i) {
    const double h = 1e-6;
    Eigen::VectorXd zp = z, zm = z, v;
    Eigen::MatrixXd Jp, Jm;
    zp(i) += h;
    zm(i) -= h;
    block.evaluate(zp, v, &Jp);
    block.evaluate(zm, v, &Jm);
    const Eigen::VectorXd col = ((Jp - Jm) / (2 * h)).transpose() * w;
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(H(j, i), col(j), 1e-6);
  }
}

TEST(Problem, AssemblesLinearAndBlockTerms) {
  Problem p;
  const int x = p.addVariables(3);
  const int r = p.addConstraints(3);
  p.addLinear(r, x, 2.0);
  p.addConstant(r, -1.0);
  p.addBlock(makeBlock(Trig{}), {x, x + 1, x + 2}, r + 1);
  Eigen::VectorXd z(3);
  z << 0.1, 0.2, 0.3;
  const FirstOrder fo = p.firstOrder(z);
  EXPECT_NEAR(fo.constraints(0), 2 * 0.1 - 1.0, 1e-15);
  EXPECT_EQ(fo.jacobian.rows(), 3);
  EXPECT_NEAR(fo.jacobian.coeff(0, 0), 2.0, 1e-15);
  EXPECT_NEAR((fo.constraints - p.constraints(z)).norm(), 0.0, 1e-15);
  EXPECT_THROW(p.addBlock(makeBlock(Trig{}), {x, x + 1}, r), std::invalid_argument);
}

TEST(InteriorPoint, MinimumNormWithOneEquality) {
  Problem p;
  const int n = 5;
  const int x = p.addVariables(n);
  for (int i = 0; i < n; ++i) p.addObjectiveBlock(makeBlock(Square{}), {x + i});
  const int r = p.addConstraints(1);
  p.addLinear(r, x, 1.0);
  p.addConstant(r, -1.0);
  const SolverResult res = InteriorPointSolver{}.solve(p, Eigen::VectorXd::Constant(n, 0.3));
  ASSERT_EQ(res.status, SolverStatus::Optimal) << res.message;
  EXPECT_NEAR(res.x(0), 1.0, 1e-8);
  EXPECT_NEAR(res.x.tail(n - 1).norm(), 0.0, 1e-8);
  EXPECT_NEAR(res.objective, 1.0, 1e-8);
}

TEST(InteriorPoint, RosenbrockUnconstrained) {
  Problem p;
  const int x = p.addVariables(2);
  p.addObjectiveBlock(makeBlock(Rosenbrock{}), {x, x + 1});
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const SolverResult res = InteriorPointSolver{}.solve(p, x0);
  ASSERT_TRUE(converged(res.status)) << res.message;
  EXPECT_NEAR(res.x(0), 1.0, 1e-6);
  EXPECT_NEAR(res.x(1), 1.0, 1e-6);
}

TEST(InteriorPoint, Hs71WithActiveBounds) {
  Problem p;
  const int x = p.addVariables(4, 1.0, 5.0);
  p.addObjectiveBlock(makeBlock(Hs71Objective{}), {x, x + 1, x + 2, x + 3});
  const int r = p.addConstraints(1);
  p.addBlock(makeBlock(Hs71Sphere{}), {x, x + 1, x + 2, x + 3}, r);
  // Product constraint x1 x2 x3 x4 >= 25 becomes an equality with a slack.
  const int s = p.addVariables(1, 0.0, kInf);
  const int r2 = p.addConstraints(1);
  p.addBlock(makeBlock(Hs71Product{}), {x, x + 1, x + 2, x + 3, s}, r2);
  Eigen::VectorXd x0(5);
  x0 << 1, 5, 5, 1, 0;
  const SolverResult res = InteriorPointSolver{}.solve(p, x0);
  ASSERT_TRUE(converged(res.status)) << res.message;
  EXPECT_NEAR(res.objective, 17.0140173, 1e-6);
  EXPECT_NEAR(res.x(0), 1.0, 1e-6);
  EXPECT_NEAR(res.x(2), 3.82114998, 1e-6);
}

TEST(InteriorPoint, InconsistentLinearConstraintsFail) {
  Problem p;
  const int x = p.addVariables(1);
  const int r = p.addConstraints(2);
  p.addLinear(r, x, 1.0);
  p.addConstant(r, -1.0);
  p.addLinear(r + 1, x, 1.0);
  p.addConstant(r + 1, 1.0);
  SolverOptions o;
  o.max_iterations = 200;
  const SolverResult res = InteriorPointSolver{o}.solve(p, Eigen::VectorXd::Zero(1));
  EXPECT_FALSE(converged(res.status));
  EXPECT_GT(res.primal_infeasibility, 0.5);
}

TEST(InteriorPoint, UnknownSolverNameThrows) {
  EXPECT_NO_THROW(makeSolver("ipm"));
  EXPECT_THROW(makeSolver("snopt"), std::invalid_argument);
}
