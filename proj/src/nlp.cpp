#include "bsa/nlp.hpp"

#include <stdexcept>

namespace bsa::nlp {

int Problem::addVariables(int n, double lower, double upper) {
  const int first = numVariables();
  lower_.conservativeResize(first + n);
  upper_.conservativeResize(first + n);
  scale_.conservativeResize(first + n);
  scale_.tail(n).setOnes();
  lower_.tail(n).setConstant(lower);
  upper_.tail(n).setConstant(upper);
  return first;
}

int Problem::addConstraints(int m) {
  const int first = rows_;
  rows_ += m;
  return first;
}

void Problem::setBounds(int var, double lower, double upper) {
  if (lower > upper) throw std::invalid_argument("variable lower bound exceeds upper bound");
  lower_(var) = lower;
  upper_(var) = upper;
}

void Problem::setScale(int var, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("variable scale must be positive");
  scale_(var) = scale;
}

void Problem::addLinear(int row, int var, double coeff) {
  if (row < 0 || row >= rows_ || var < 0 || var >= numVariables()) throw std::out_of_range("linear term index");
  linear_.emplace_back(row, var, coeff);
}

void Problem::addConstant(int row, double value) { constants_.emplace_back(row, value); }

void Problem::addBlock(std::shared_ptr<const BlockFunction> fn, std::vector<int> vars, int row) {
  if (static_cast<int>(vars.size()) != fn->inputs()) throw std::invalid_argument("block arity mismatch");
  if (row < 0 || row + fn->outputs() > rows_) throw std::out_of_range("block rows");
  blocks_.push_back({std::move(fn), std::move(vars), row});
}

void Problem::addObjectiveLinear(int var, double coeff) { objective_linear_.emplace_back(var, coeff); }

void Problem::addObjectiveBlock(std::shared_ptr<const BlockFunction> fn, std::vector<int> vars) {
  if (fn->outputs() != 1) throw std::invalid_argument("objective blocks must be scalar");
  if (static_cast<int>(vars.size()) != fn->inputs()) throw std::invalid_argument("block arity mismatch");
  objective_blocks_.push_back({std::move(fn), std::move(vars), -1});
}

Eigen::VectorXd Problem::gather(const Eigen::VectorXd& x, const std::vector<int>& vars) const {
  Eigen::VectorXd z(static_cast<Eigen::Index>(vars.size()));
  for (std::size_t i = 0; i < vars.size(); ++i) z(static_cast<Eigen::Index>(i)) = x(vars[i]);
  return z;
}

double Problem::objective(const Eigen::VectorXd& x) const {
  double f = 0.0;
  for (const auto& [var, c] : objective_linear_) f += c * x(var);
  Eigen::VectorXd v;
  for (const auto& b : objective_blocks_) {
    b.fn->evaluate(gather(x, b.vars), v, nullptr);
    f += v(0);
  }
  return f;
}

Eigen::VectorXd Problem::constraints(const Eigen::VectorXd& x) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(rows_);
  for (const auto& t : linear_) c(t.row()) += t.value() * x(t.col());
  for (const auto& [row, v] : constants_) c(row) += v;
  Eigen::VectorXd v;
  for (const auto& b : blocks_) {
    b.fn->evaluate(gather(x, b.vars), v, nullptr);
    c.segment(b.row, v.size()) += v;
  }
  return c;
}

FirstOrder Problem::firstOrder(const Eigen::VectorXd& x) const {
  FirstOrder out;
  out.gradient = Eigen::VectorXd::Zero(numVariables());
  out.constraints = Eigen::VectorXd::Zero(rows_);
  std::vector<Eigen::Triplet<double>> trip = linear_;

  for (const auto& [var, c] : objective_linear_) {
    out.objective += c * x(var);
    out.gradient(var) += c;
  }
  Eigen::VectorXd v;
  Eigen::MatrixXd J;
  for (const auto& b : objective_blocks_) {
    b.fn->evaluate(gather(x, b.vars), v, &J);
    out.objective += v(0);
    for (std::size_t i = 0; i < b.vars.size(); ++i) out.gradient(b.vars[i]) += J(0, static_cast<Eigen::Index>(i));
  }

  for (const auto& t : linear_) out.constraints(t.row()) += t.value() * x(t.col());
  for (const auto& [row, c] : constants_) out.constraints(row) += c;
  for (const auto& b : blocks_) {
    b.fn->evaluate(gather(x, b.vars), v, &J);
    out.constraints.segment(b.row, v.size()) += v;
    for (Eigen::Index r = 0; r < J.rows(); ++r) {
      for (std::size_t i = 0; i < b.vars.size(); ++i) {
        trip.emplace_back(b.row + static_cast<int>(r), b.vars[i], J(r, static_cast<Eigen::Index>(i)));
      }
    }
  }
  out.jacobian.resize(rows_, numVariables());
  out.jacobian.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SparseMatrix Problem::hessian(const Eigen::VectorXd& x, double obj_factor, const Eigen::VectorXd& lambda) const {
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd H;
  auto scatter = [&](const std::vector<int>& vars) {
    for (std::size_t i = 0; i < vars.size(); ++i) {
      for (std::size_t j = 0; j < vars.size(); ++j) {
        const int r = vars[i], c = vars[j];
        if (r >= c) trip.emplace_back(r, c, H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    }
  };
  Eigen::VectorXd w(1);
  w(0) = obj_factor;
  for (const auto& b : objective_blocks_) {
    b.fn->hessian(gather(x, b.vars), w, H);
    scatter(b.vars);
  }
  for (const auto& b : blocks_) {
    b.fn->hessian(gather(x, b.vars), lambda.segment(b.row, b.fn->outputs()), H);
    scatter(b.vars);
  }
  SparseMatrix out(numVariables(), numVariables());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace bsa::nlp
