#pragma once

#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <unsupported/Eigen/AutoDiff>

#include "bsa/types.hpp"

namespace bsa::nlp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using SparseMatrix = Eigen::SparseMatrix<double>;

/// A small dense vector function z -> F(z) with first and second derivatives.
class BlockFunction {
 public:
  virtual ~BlockFunction() = default;
  virtual int inputs() const = 0;
  virtual int outputs() const = 0;
  /// Writes F(z) and, if jac != nullptr, dF/dz (outputs x inputs).
  virtual void evaluate(const Eigen::VectorXd& z, Eigen::VectorXd& value, Eigen::MatrixXd* jac) const = 0;
  /// Writes sum_i weights(i) * d^2 F_i / dz^2.
  virtual void hessian(const Eigen::VectorXd& z, const Eigen::VectorXd& weights, Eigen::MatrixXd& hess) const = 0;
};

/// Forward-mode AD wrapper. Functor must provide kInputs, kOutputs and
///   template <typename S> Vec<kOutputs, S> operator()(const Vec<kInputs, S>&) const;
/// Jacobians use first-order dual numbers; Hessians nest them.
template <typename Functor>
class AutoDiffBlock final : public BlockFunction {
 public:
  static constexpr int N = Functor::kInputs;
  static constexpr int M = Functor::kOutputs;
  using Inner = Eigen::AutoDiffScalar<Vec<N>>;
  using Outer = Eigen::AutoDiffScalar<Vec<N, Inner>>;

  explicit AutoDiffBlock(Functor f) : f_(std::move(f)) {}

  int inputs() const override { return N; }
  int outputs() const override { return M; }

  void evaluate(const Eigen::VectorXd& z, Eigen::VectorXd& value, Eigen::MatrixXd* jac) const override {
    if (jac == nullptr) {
      const Vec<N> zz = z;
      value = f_(zz);
      return;
    }
    Vec<N, Inner> za;
    for (int i = 0; i < N; ++i) za(i) = Inner(z(i), N, i);
    const Vec<M, Inner> out = f_(za);
    value.resize(M);
    jac->resize(M, N);
    for (int r = 0; r < M; ++r) {
      value(r) = out(r).value();
      if (out(r).derivatives().size() == N) {
        jac->row(r) = out(r).derivatives().transpose();
      } else {
        jac->row(r).setZero();
      }
    }
  }

  void hessian(const Eigen::VectorXd& z, const Eigen::VectorXd& weights, Eigen::MatrixXd& hess) const override {
    Vec<N, Outer> za;
    for (int i = 0; i < N; ++i) {
      za(i).value() = Inner(z(i), N, i);
      za(i).derivatives() = Vec<N, Inner>::Zero();
      za(i).derivatives()(i) = Inner(1.0, Vec<N>::Zero());
    }
    const Vec<M, Outer> out = f_(za);
    hess.setZero(N, N);
    for (int r = 0; r < M; ++r) {
      if (weights(r) == 0.0 || out(r).derivatives().size() != N) continue;
      for (int i = 0; i < N; ++i) {
        const auto& d = out(r).derivatives()(i).derivatives();
        if (d.size() == N) hess.row(i) += weights(r) * d.transpose();
      }
    }
  }

  const Functor& functor() const { return f_; }

 private:
  Functor f_;
};

template <typename Functor>
std::shared_ptr<const BlockFunction> makeBlock(Functor f) {
  return std::make_shared<AutoDiffBlock<Functor>>(std::move(f));
}

/// Evaluation of everything the solver needs at first order.
struct FirstOrder {
  double objective = 0.0;
  Eigen::VectorXd gradient;
  Eigen::VectorXd constraints;
  SparseMatrix jacobian;
};

/// Sparse NLP: min f(x) s.t. c(x) = 0, lower <= x <= upper.
/// f and c are sums of linear terms and nonlinear blocks over a few variables.
class Problem {
 public:
  /// Appends n variables; returns the index of the first.
  int addVariables(int n, double lower = -kInf, double upper = kInf);
  /// Appends m equality rows; returns the index of the first.
  int addConstraints(int m);

  void setBounds(int var, double lower, double upper);
  /// Typical magnitude of a variable; the solver iterates on x / scale.
  void setScale(int var, double scale);
  void addLinear(int row, int var, double coeff);
  void addConstant(int row, double value);
  /// Adds F(x[vars]) to rows row .. row + F.outputs() - 1.
  void addBlock(std::shared_ptr<const BlockFunction> fn, std::vector<int> vars, int row);
  void addObjectiveLinear(int var, double coeff);
  /// Adds the single-output F(x[vars]) to the objective.
  void addObjectiveBlock(std::shared_ptr<const BlockFunction> fn, std::vector<int> vars);

  int numVariables() const { return static_cast<int>(lower_.size()); }
  int numConstraints() const { return rows_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  const Eigen::VectorXd& scale() const { return scale_; }

  double objective(const Eigen::VectorXd& x) const;
  Eigen::VectorXd constraints(const Eigen::VectorXd& x) const;
  FirstOrder firstOrder(const Eigen::VectorXd& x) const;
  /// Lower triangle of obj_factor * grad^2 f + sum_i lambda_i grad^2 c_i.
  SparseMatrix hessian(const Eigen::VectorXd& x, double obj_factor, const Eigen::VectorXd& lambda) const;
  /// Number of constraint blocks (for structural checks).
  int numConstraintBlocks() const { return static_cast<int>(blocks_.size()); }

 private:
  struct Block {
    std::shared_ptr<const BlockFunction> fn;
    std::vector<int> vars;
    int row;
  };
  Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<int>& vars) const;

  Eigen::VectorXd lower_, upper_, scale_;
  int rows_ = 0;
  std::vector<Eigen::Triplet<double>> linear_;
  std::vector<std::pair<int, double>> constants_;
  std::vector<std::pair<int, double>> objective_linear_;
  std::vector<Block> blocks_;
  std::vector<Block> objective_blocks_;
};

}  // namespace bsa::nlp
