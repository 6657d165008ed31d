#include "bsa/interior_point.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace bsa::nlp {

std::string toString(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::Acceptable: return "acceptable";
    case SolverStatus::MaxIterations: return "max-iterations";
    case SolverStatus::RestorationFailed: return "restoration-failed";
    case SolverStatus::Infeasible: return "infeasible";
    case SolverStatus::NumericalError: return "numerical-error";
  }
  return "unknown";
}

bool converged(SolverStatus s) { return s == SolverStatus::Optimal || s == SolverStatus::Acceptable; }

std::vector<std::string> solverNames() { return {"ipm"}; }

std::unique_ptr<SolverInterface> makeSolver(const std::string& name, SolverOptions options) {
  if (name == "ipm" || name.empty()) return std::make_unique<InteriorPointSolver>(options);
  throw std::invalid_argument("unknown solver '" + name + "'");
}

namespace {

constexpr double kGammaTheta = 1e-5;
constexpr double kGammaPhi = 1e-8;
constexpr double kSTheta = 1.1;
constexpr double kSPhi = 2.3;
constexpr double kEta = 1e-4;
constexpr double kDelta = 1.0;
constexpr double kKappaSigma = 1e10;
constexpr double kKappaEpsilon = 10.0;
constexpr double kKappaMu = 0.2;
constexpr double kThetaMu = 1.5;
constexpr double kSmax = 100.0;
constexpr double kKappaSoc = 0.99;
constexpr int kMaxSoc = 4;
// Watchdog: full steps taken after a failed line search before reverting.
constexpr int kWatchdogSteps = 6;
constexpr int kMaxWatchdogUses = 40;

// Scaled view of the problem plus the barrier bookkeeping.
class Workspace {
 public:
  Workspace(const Problem& p, const SolverOptions& o) : p_(p), opt_(o), n_(p.numVariables()), m_(p.numConstraints()) {
    d_ = p.scale();
    lower_ = p.lower().cwiseQuotient(d_);
    upper_ = p.upper().cwiseQuotient(d_);
    has_l_.resize(n_);
    has_u_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      has_l_[i] = std::isfinite(lower_(i));
      has_u_[i] = std::isfinite(upper_(i));
      if (has_l_[i]) lower_(i) -= o.bound_relax * std::max(1.0, std::abs(lower_(i)));
      if (has_u_[i]) upper_(i) += o.bound_relax * std::max(1.0, std::abs(upper_(i)));
    }
    obj_scale_ = 1.0;
    con_scale_ = Eigen::VectorXd::Ones(m_);
  }

  int n() const { return n_; }
  int m() const { return m_; }

  Eigen::VectorXd toInternal(const Eigen::VectorXd& x) const { return x.cwiseQuotient(d_); }
  Eigen::VectorXd toExternal(const Eigen::VectorXd& x) const { return x.cwiseProduct(d_); }
  const Eigen::VectorXd& variableScale() const { return d_; }

  Eigen::VectorXd pushInterior(const Eigen::VectorXd& x0) const {
    Eigen::VectorXd x = x0;
    const double k = opt_.bound_push;
    for (int i = 0; i < n_; ++i) {
      if (has_l_[i] && has_u_[i]) {
        const double pl = std::min(k * std::max(1.0, std::abs(lower_(i))), k * (upper_(i) - lower_(i)));
        const double pu = std::min(k * std::max(1.0, std::abs(upper_(i))), k * (upper_(i) - lower_(i)));
        x(i) = std::clamp(x(i), lower_(i) + pl, upper_(i) - pu);
      } else if (has_l_[i]) {
        x(i) = std::max(x(i), lower_(i) + k * std::max(1.0, std::abs(lower_(i))));
      } else if (has_u_[i]) {
        x(i) = std::min(x(i), upper_(i) - k * std::max(1.0, std::abs(upper_(i))));
      }
    }
    return x;
  }

  void computeScaling(const Eigen::VectorXd& x) {
    const FirstOrder fo = p_.firstOrder(toExternal(x));
    const Eigen::VectorXd g = fo.gradient.cwiseProduct(d_);
    const SparseMatrix J = fo.jacobian * d_.asDiagonal();
    const double gmax = g.size() ? g.lpNorm<Eigen::Infinity>() : 0.0;
    obj_scale_ = gmax > opt_.max_gradient_scale ? opt_.max_gradient_scale / gmax : 1.0;
    Eigen::VectorXd rowmax = Eigen::VectorXd::Zero(m_);
    for (int k = 0; k < J.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(J, k); it; ++it) {
        rowmax(it.row()) = std::max(rowmax(it.row()), std::abs(it.value()));
      }
    }
    for (int j = 0; j < m_; ++j) {
      con_scale_(j) = rowmax(j) > opt_.max_gradient_scale ? opt_.max_gradient_scale / rowmax(j) : 1.0;
    }
  }

  struct Eval {
    double f = 0.0;
    Eigen::VectorXd grad, c;
    SparseMatrix J;
    bool finite = true;
  };

  Eval evaluate(const Eigen::VectorXd& x) const {
    FirstOrder fo = p_.firstOrder(toExternal(x));
    Eval e;
    e.f = obj_scale_ * fo.objective;
    e.grad = obj_scale_ * fo.gradient.cwiseProduct(d_);
    e.c = con_scale_.cwiseProduct(fo.constraints);
    e.J = con_scale_.asDiagonal() * fo.jacobian * d_.asDiagonal();
    e.finite = std::isfinite(e.f) && e.grad.allFinite() && e.c.allFinite();
    return e;
  }

  // Objective and constraints only, for line-search trials.
  bool evaluateTrial(const Eigen::VectorXd& x, double& f, Eigen::VectorXd& c) const {
    const Eigen::VectorXd xe = toExternal(x);
    f = obj_scale_ * p_.objective(xe);
    c = con_scale_.cwiseProduct(p_.constraints(xe));
    return std::isfinite(f) && c.allFinite();
  }

  SparseMatrix hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    const SparseMatrix H = p_.hessian(toExternal(x), obj_scale_, con_scale_.cwiseProduct(y));
    return SparseMatrix(d_.asDiagonal() * H * d_.asDiagonal());
  }

  double barrier(const Eigen::VectorXd& x, double f, double mu) const {
    double b = f;
    for (int i = 0; i < n_; ++i) {
      if (has_l_[i]) b -= mu * std::log(x(i) - lower_(i));
      if (has_u_[i]) b -= mu * std::log(upper_(i) - x(i));
    }
    return b;
  }

  Eigen::VectorXd barrierGradient(const Eigen::VectorXd& x, const Eigen::VectorXd& grad, double mu) const {
    Eigen::VectorXd g = grad;
    for (int i = 0; i < n_; ++i) {
      if (has_l_[i]) g(i) -= mu / (x(i) - lower_(i));
      if (has_u_[i]) g(i) += mu / (upper_(i) - x(i));
    }
    return g;
  }

  Eigen::VectorXd sigma(const Eigen::VectorXd& x, const Eigen::VectorXd& zl, const Eigen::VectorXd& zu) const {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      if (has_l_[i]) s(i) += zl(i) / (x(i) - lower_(i));
      if (has_u_[i]) s(i) += zu(i) / (upper_(i) - x(i));
    }
    return s;
  }

  // Largest alpha in (0,1] keeping x + alpha dx strictly inside by fraction tau.
  double maxStepPrimal(const Eigen::VectorXd& x, const Eigen::VectorXd& dx, double tau) const {
    double a = 1.0;
    for (int i = 0; i < n_; ++i) {
      if (has_l_[i] && dx(i) < 0.0) a = std::min(a, -tau * (x(i) - lower_(i)) / dx(i));
      if (has_u_[i] && dx(i) > 0.0) a = std::min(a, tau * (upper_(i) - x(i)) / dx(i));
    }
    return a;
  }

  double maxStepDual(const Eigen::VectorXd& zl, const Eigen::VectorXd& dzl, const Eigen::VectorXd& zu,
                     const Eigen::VectorXd& dzu, double tau) const {
    double a = 1.0;
    for (int i = 0; i < n_; ++i) {
      if (has_l_[i] && dzl(i) < 0.0) a = std::min(a, -tau * zl(i) / dzl(i));
      if (has_u_[i] && dzu(i) < 0.0) a = std::min(a, -tau * zu(i) / dzu(i));
    }
    return a;
  }

  void boundDualStep(const Eigen::VectorXd& x, const Eigen::VectorXd& zl, const Eigen::VectorXd& zu,
                     const Eigen::VectorXd& dx, double mu, Eigen::VectorXd& dzl, Eigen::VectorXd& dzu) const {
    dzl = Eigen::VectorXd::Zero(n_);
    dzu = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      if (has_l_[i]) {
        const double s = x(i) - lower_(i);
        dzl(i) = mu / s - zl(i) - zl(i) / s * dx(i);
      }
      if (has_u_[i]) {
        const double s = upper_(i) - x(i);
        dzu(i) = mu / s - zu(i) + zu(i) / s * dx(i);
      }
    }
  }

  void centralDuals(const Eigen::VectorXd& x, double mu, Eigen::VectorXd& zl, Eigen::VectorXd& zu) const {
    zl = Eigen::VectorXd::Zero(n_);
    zu = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      if (has_l_[i]) zl(i) = mu / (x(i) - lower_(i));
      if (has_u_[i]) zu(i) = mu / (upper_(i) - x(i));
    }
  }

  // Keeps z within a factor kKappaSigma of mu / slack.
  void safeguardDuals(const Eigen::VectorXd& x, double mu, Eigen::VectorXd& zl, Eigen::VectorXd& zu) const {
    for (int i = 0; i < n_; ++i) {
      if (has_l_[i]) {
        const double s = x(i) - lower_(i);
        zl(i) = std::clamp(zl(i), mu / (kKappaSigma * s), kKappaSigma * mu / s);
      }
      if (has_u_[i]) {
        const double s = upper_(i) - x(i);
        zu(i) = std::clamp(zu(i), mu / (kKappaSigma * s), kKappaSigma * mu / s);
      }
    }
  }

  double complementarity(const Eigen::VectorXd& x, const Eigen::VectorXd& zl, const Eigen::VectorXd& zu,
                         double mu) const {
    double e = 0.0;
    for (int i = 0; i < n_; ++i) {
      if (has_l_[i]) e = std::max(e, std::abs((x(i) - lower_(i)) * zl(i) - mu));
      if (has_u_[i]) e = std::max(e, std::abs((upper_(i) - x(i)) * zu(i) - mu));
    }
    return e;
  }

  int boundCount() const {
    int k = 0;
    for (int i = 0; i < n_; ++i) k += has_l_[i] + has_u_[i];
    return k;
  }

  bool hasLower(int i) const { return has_l_[i]; }
  bool hasUpper(int i) const { return has_u_[i]; }
  double objScale() const { return obj_scale_; }
  const Eigen::VectorXd& conScale() const { return con_scale_; }
  const Problem& problem() const { return p_; }

 private:
  const Problem& p_;
  const SolverOptions& opt_;
  int n_, m_;
  Eigen::VectorXd d_, lower_, upper_;
  std::vector<char> has_l_, has_u_;
  double obj_scale_;
  Eigen::VectorXd con_scale_;
};

// Symmetric indefinite KKT factorization with inertia correction.
class KktSystem {
 public:
  KktSystem(int n, int m) : n_(n), m_(m) {}

  // Factorizes [H + diag(sigma) + dw I, J^T; J, -dc I]; returns false if no usable regularization exists.
  bool factorize(const SparseMatrix& H, const Eigen::VectorXd& sigma, const SparseMatrix& J, double mu) {
    double dw = 0.0, dc = 0.0;
    bool first = true;
    for (int attempt = 0; attempt < 60; ++attempt) {
      assemble(H, sigma, J, dw, dc);
      if (nnz_ != K_.nonZeros()) {
        ldlt_.analyzePattern(K_);
        nnz_ = K_.nonZeros();
      }
      ldlt_.factorize(K_);
      int pos = 0, neg = 0, zero = 0;
      if (ldlt_.info() == Eigen::Success) {
        const Eigen::VectorXd d = ldlt_.vectorD();
        for (Eigen::Index i = 0; i < d.size(); ++i) {
          if (!std::isfinite(d(i))) {
            zero = 1;
            break;
          }
          if (std::abs(d(i)) < 1e-30) ++zero;
          else if (d(i) > 0) ++pos;
          else ++neg;
        }
      } else {
        zero = 1;
      }
      if (zero == 0 && pos == n_ && neg == m_) {
        if (dw > 0.0) last_dw_ = dw;
        regularization_ = dw;
        lu_ready_ = false;
        return true;
      }
      if (zero > 0 && dc == 0.0 && m_ > 0) dc = 1e-8 * std::pow(mu, 0.25);
      if (first) {
        first = false;
        if (zero > 0 && m_ > 0 && pos + zero >= n_ && dw == 0.0) {
          // Retry with only constraint regularization before touching the Hessian.
          assemble(H, sigma, J, 0.0, dc);
          ldlt_.factorize(K_);
          if (ldlt_.info() == Eigen::Success && inertiaOk()) {
            regularization_ = 0.0;
            lu_ready_ = false;
            return true;
          }
        }
        dw = last_dw_ == 0.0 ? 1e-4 : std::max(1e-20, last_dw_ / 3.0);
      } else {
        dw *= last_dw_ == 0.0 ? 100.0 : 8.0;
      }
      if (dw > 1e40) return false;
    }
    return false;
  }

  // The LDL^T factor does not pivot and can lose accuracy on indefinite
  // systems; a pivoted LU of the same matrix takes over when refinement stalls.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) {
    const double target = 1e-10 * std::max(1.0, rhs.norm());
    auto K = K_.selfadjointView<Eigen::Lower>();
    if (!lu_ready_) {
      Eigen::VectorXd sol = ldlt_.solve(rhs);
      for (int k = 0; k < 3; ++k) {
        const Eigen::VectorXd r = rhs - K * sol;
        if (r.norm() <= target) return sol;
        sol += ldlt_.solve(r);
      }
      if ((rhs - K * sol).norm() <= target || !factorizeLu()) return sol;
    }
    Eigen::VectorXd sol = lu_.solve(rhs);
    for (int k = 0; k < 3; ++k) {
      const Eigen::VectorXd r = rhs - full_ * sol;
      if (r.norm() <= target) break;
      sol += lu_.solve(r);
    }
    return sol;
  }

  double regularization() const { return regularization_; }

 private:
  bool factorizeLu() {
    full_ = K_.selfadjointView<Eigen::Lower>();
    if (full_.nonZeros() != lu_nnz_) {
      lu_.analyzePattern(full_);
      lu_nnz_ = full_.nonZeros();
    }
    lu_.factorize(full_);
    lu_ready_ = lu_.info() == Eigen::Success;
    return lu_ready_;
  }

  bool inertiaOk() const {
    const Eigen::VectorXd d = ldlt_.vectorD();
    int pos = 0, neg = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!std::isfinite(d(i)) || std::abs(d(i)) < 1e-30) return false;
      (d(i) > 0 ? pos : neg)++;
    }
    return pos == n_ && neg == m_;
  }

  void assemble(const SparseMatrix& H, const Eigen::VectorXd& sigma, const SparseMatrix& J, double dw, double dc) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(H.nonZeros() + J.nonZeros() + n_ + m_));
    for (int k = 0; k < H.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(H, k); it; ++it) {
        if (it.row() >= it.col()) t.emplace_back(it.row(), it.col(), it.value());
      }
    }
    for (int i = 0; i < n_; ++i) t.emplace_back(i, i, sigma(i) + dw);
    for (int k = 0; k < J.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(J, k); it; ++it) t.emplace_back(n_ + it.row(), it.col(), it.value());
    }
    for (int j = 0; j < m_; ++j) t.emplace_back(n_ + j, n_ + j, -dc);
    K_.resize(n_ + m_, n_ + m_);
    K_.setFromTriplets(t.begin(), t.end());
  }

  int n_, m_;
  SparseMatrix K_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  Eigen::Index nnz_ = -1;
  SparseMatrix full_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  Eigen::Index lu_nnz_ = -1;
  bool lu_ready_ = false;
  double last_dw_ = 0.0;
  double regularization_ = 0.0;
};

struct FilterEntry {
  double theta, phi;
};

bool filterAccepts(const std::vector<FilterEntry>& filter, double theta, double phi) {
  for (const auto& e : filter) {
    if (theta >= e.theta && phi >= e.phi) return false;
  }
  return true;
}

// Least-squares multipliers from [I J^T; J 0][w; y] = [-(grad - zl + zu); 0].
Eigen::VectorXd leastSquaresMultipliers(const Workspace& ws, const Workspace::Eval& e, const Eigen::VectorXd& zl,
                                        const Eigen::VectorXd& zu) {
  const int n = ws.n(), m = ws.m();
  if (m == 0) return Eigen::VectorXd();
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, 1.0);
  for (int k = 0; k < e.J.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(e.J, k); it; ++it) t.emplace_back(n + it.row(), it.col(), it.value());
  }
  for (int j = 0; j < m; ++j) t.emplace_back(n + j, n + j, -1e-10);
  SparseMatrix K(n + m, n + m);
  K.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(K);
  if (ldlt.info() != Eigen::Success) return Eigen::VectorXd::Zero(m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
  rhs.head(n) = -(e.grad - zl + zu);
  const Eigen::VectorXd sol = ldlt.solve(rhs);
  Eigen::VectorXd y = sol.tail(m);
  if (!y.allFinite() || y.lpNorm<Eigen::Infinity>() > 1e3) y.setZero();
  return y;
}

}  // namespace

SolverResult InteriorPointSolver::solve(const Problem& problem, const Eigen::VectorXd& x0) const {
  const SolverOptions& o = options_;
  Workspace ws(problem, o);
  const int n = ws.n(), m = ws.m();
  if (x0.size() != n) throw std::invalid_argument("initial guess has wrong dimension");

  SolverResult result;
  Eigen::VectorXd x = ws.pushInterior(ws.toInternal(x0));
  ws.computeScaling(x);

  double mu = o.mu_init;
  Eigen::VectorXd zl = Eigen::VectorXd::Zero(n), zu = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (ws.hasLower(i)) zl(i) = 1.0;
    if (ws.hasUpper(i)) zu(i) = 1.0;
  }

  Workspace::Eval ev = ws.evaluate(x);
  if (!ev.finite) {
    result.status = SolverStatus::NumericalError;
    result.message = "non-finite values at the initial point";
    result.x = ws.toExternal(x);
    return result;
  }
  Eigen::VectorXd y = leastSquaresMultipliers(ws, ev, zl, zu);
  if (y.size() != m) y = Eigen::VectorXd::Zero(m);

  KktSystem kkt(n, m);
  const double theta0 = ev.c.lpNorm<1>();
  const double theta_max = 1e4 * std::max(1.0, theta0);
  const double theta_min = 1e-4 * std::max(1.0, theta0);
  std::vector<FilterEntry> filter{{theta_max, -std::numeric_limits<double>::infinity()}};
  int acceptable_count = 0;
  struct Saved {
    Eigen::VectorXd x, y, zl, zu;
    double mu;
    std::vector<FilterEntry> filter;
  } saved;
  int watchdog_left = 0;
  int watchdog_uses = 0;
  bool watchdog_blocked = false;
  const int nb = std::max(1, ws.boundCount());

  auto errors = [&](double mu_now, double& dual, double& primal, double& compl_err) {
    const Eigen::VectorXd gl = ev.grad + (m > 0 ? Eigen::VectorXd(ev.J.transpose() * y) : Eigen::VectorXd::Zero(n)) -
                               zl + zu;
    const double sd = std::max(kSmax, (y.lpNorm<1>() + zl.lpNorm<1>() + zu.lpNorm<1>()) / (m + nb)) / kSmax;
    const double sc = std::max(kSmax, (zl.lpNorm<1>() + zu.lpNorm<1>()) / nb) / kSmax;
    dual = (n > 0 ? gl.lpNorm<Eigen::Infinity>() : 0.0) / sd;
    primal = m > 0 ? ev.c.lpNorm<Eigen::Infinity>() : 0.0;
    compl_err = ws.complementarity(x, zl, zu, mu_now) / sc;
    return std::max({dual, primal, compl_err});
  };

  auto unscaledInfeasibility = [&]() {
    return m > 0 ? ev.c.cwiseQuotient(ws.conScale()).lpNorm<Eigen::Infinity>() : 0.0;
  };

  auto finish = [&](SolverStatus status, int iter, const std::string& msg) {
    result.status = status;
    result.x = ws.toExternal(x);
    result.multipliers = m > 0 ? Eigen::VectorXd(ws.conScale().cwiseProduct(y) / ws.objScale()) : Eigen::VectorXd();
    result.z_lower = zl.cwiseQuotient(ws.variableScale()) / ws.objScale();
    result.z_upper = zu.cwiseQuotient(ws.variableScale()) / ws.objScale();
    result.objective = ev.f / ws.objScale();
    result.iterations = iter;
    result.primal_infeasibility = unscaledInfeasibility();
    double d, p, c;
    errors(0.0, d, p, c);
    result.dual_infeasibility = d;
    result.complementarity = c;
    result.message = msg;
    return result;
  };

  bool restoration_last = false;
  for (int iter = 0; iter <= o.max_iterations; ++iter) {
    double dual, primal, compl_err;
    const double e0 = errors(0.0, dual, primal, compl_err);
    const double pinf = unscaledInfeasibility();
    if (e0 <= o.tol && pinf <= o.constraint_tolerance) return finish(SolverStatus::Optimal, iter, "converged");
    if (e0 <= o.acceptable_tol && pinf <= o.acceptable_constraint_tolerance) {
      if (++acceptable_count >= o.acceptable_iterations) {
        return finish(SolverStatus::Acceptable, iter, "converged to acceptable level");
      }
    } else {
      acceptable_count = 0;
    }
    if (iter == o.max_iterations) return finish(SolverStatus::MaxIterations, iter, "iteration limit reached");

    // Monotone barrier update.
    for (;;) {
      double d2, p2, c2;
      if (errors(mu, d2, p2, c2) > kKappaEpsilon * mu) break;
      const double next = std::max(o.tol / 10.0, std::min(kKappaMu * mu, std::pow(mu, kThetaMu)));
      if (next >= mu) break;
      mu = next;
      filter.assign(1, {theta_max, -std::numeric_limits<double>::infinity()});
    }
    const double tau = std::max(0.99, 1.0 - mu);

    const SparseMatrix H = ws.hessian(x, y);
    const Eigen::VectorXd sig = ws.sigma(x, zl, zu);
    if (!kkt.factorize(H, sig, ev.J, mu)) {
      return finish(SolverStatus::NumericalError, iter, "KKT factorization failed");
    }

    const Eigen::VectorXd gphi = ws.barrierGradient(x, ev.grad, mu);
    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = -(gphi + (m > 0 ? Eigen::VectorXd(ev.J.transpose() * y) : Eigen::VectorXd::Zero(n)));
    if (m > 0) rhs.tail(m) = -ev.c;
    const Eigen::VectorXd sol = kkt.solve(rhs);
    if (!sol.allFinite()) return finish(SolverStatus::NumericalError, iter, "non-finite search direction");
    const Eigen::VectorXd dx = sol.head(n);
    const Eigen::VectorXd dy = sol.tail(m);
    Eigen::VectorXd dzl, dzu;
    ws.boundDualStep(x, zl, zu, dx, mu, dzl, dzu);

    const double alpha_max = ws.maxStepPrimal(x, dx, tau);
    const double alpha_z = ws.maxStepDual(zl, dzl, zu, dzu, tau);

    const double theta = ev.c.lpNorm<1>();
    const double phi = ws.barrier(x, ev.f, mu);
    const double gd = gphi.dot(dx);

    double alpha_min = kGammaTheta;
    if (gd < 0.0) {
      alpha_min = std::min(alpha_min, kGammaPhi * theta / -gd);
      if (theta <= theta_min) alpha_min = std::min(alpha_min, kDelta * std::pow(theta, kSTheta) / std::pow(-gd, kSPhi));
    }
    alpha_min *= 0.05;

    bool accepted = false;
    double alpha = alpha_max;
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    Eigen::VectorXd c_new;
    bool armijo_step = false;
    double alpha_primal_used = 0.0;

    auto acceptable = [&](const Eigen::VectorXd& xt, double a, double& ft, Eigen::VectorXd& ct, bool& armijo) {
      if (!ws.evaluateTrial(xt, ft, ct)) return false;
      const double th = ct.lpNorm<1>();
      const double ph = ws.barrier(xt, ft, mu);
      if (!std::isfinite(ph) || th > theta_max) return false;
      if (!filterAccepts(filter, th, ph)) return false;
      const bool switching = gd < 0.0 && a * std::pow(-gd, kSPhi) > kDelta * std::pow(theta, kSTheta);
      if (theta <= theta_min && switching) {
        armijo = true;
        return ph <= phi + kEta * a * gd;
      }
      armijo = false;
      return th <= (1.0 - kGammaTheta) * theta || ph <= phi - kGammaPhi * theta;
    };

    for (int trial = 0; alpha >= alpha_min; ++trial) {
      x_new = x + alpha * dx;
      if (acceptable(x_new, alpha, f_new, c_new, armijo_step)) {
        accepted = true;
        alpha_primal_used = alpha;
        break;
      }
      // Second-order correction on the first trial if infeasibility did not drop.
      if (trial == 0 && m > 0 && c_new.size() == m && c_new.allFinite() && c_new.lpNorm<1>() >= theta) {
        Eigen::VectorXd c_soc = alpha * ev.c + c_new;
        double theta_old = theta;
        double alpha_soc = alpha;
        for (int k = 0; k < kMaxSoc; ++k) {
          Eigen::VectorXd r2(n + m);
          r2.head(n) = rhs.head(n);
          r2.tail(m) = -c_soc;
          const Eigen::VectorXd s2 = kkt.solve(r2);
          const Eigen::VectorXd dx_soc = s2.head(n);
          alpha_soc = ws.maxStepPrimal(x, dx_soc, tau);
          const Eigen::VectorXd xs = x + alpha_soc * dx_soc;
          Eigen::VectorXd cs;
          double fs;
          bool arm;
          if (acceptable(xs, alpha, fs, cs, arm)) {
            x_new = xs;
            f_new = fs;
            c_new = cs;
            armijo_step = arm;
            accepted = true;
            alpha_primal_used = alpha_soc;
            break;
          }
          if (cs.size() != m || !cs.allFinite()) break;
          const double th_soc = cs.lpNorm<1>();
          if (th_soc > kKappaSoc * theta_old) break;
          theta_old = th_soc;
          c_soc = alpha_soc * c_soc + cs;
        }
        if (accepted) break;
      }
      alpha *= 0.5;
    }

    if (accepted) {
      watchdog_left = 0;
      watchdog_blocked = false;
    } else if (!watchdog_blocked && (watchdog_left > 0 || (watchdog_uses < kMaxWatchdogUses && theta <= theta_min))) {
      if (watchdog_left == 0) {
        saved = {x, y, zl, zu, mu, filter};
        watchdog_left = kWatchdogSteps;
        ++watchdog_uses;
      }
      if (--watchdog_left > 0) {
        x_new = x + alpha_max * dx;
        if (ws.evaluateTrial(x_new, f_new, c_new)) {
          accepted = true;
          armijo_step = true;
          alpha_primal_used = alpha_max;
        }
      }
      if (!accepted) {
        x = saved.x;
        y = saved.y;
        zl = saved.zl;
        zu = saved.zu;
        mu = saved.mu;
        filter = saved.filter;
        ev = ws.evaluate(x);
        watchdog_left = 0;
        watchdog_blocked = true;
        continue;
      }
    }

    if (!accepted) {
      if (e0 <= o.stall_tolerance && pinf <= o.acceptable_constraint_tolerance) {
        return finish(SolverStatus::Acceptable, iter, "line search stalled at an acceptable point");
      }
      if (restoration_last && theta < o.constraint_tolerance) {
        return finish(SolverStatus::RestorationFailed, iter, "line search failed near a feasible point");
      }
      // Feasibility restoration: regularized Gauss-Newton steps on the constraints.
      filter.push_back({(1.0 - kGammaTheta) * theta, phi - kGammaPhi * theta});
      bool restored = false;
      double theta_r = theta;
      // Steps are measured in a primal barrier metric with its own parameter,
      // so variables pinned at a bound by large duals can still move.
      const double mu_r = mu;
      const double rho = std::max(1e-8, std::sqrt(mu));
      for (int r = 0; r < 200 && !restored; ++r) {
        const SparseMatrix Hr = SparseMatrix(n, n);
        Eigen::VectorXd zl_r, zu_r;
        ws.centralDuals(x, mu_r, zl_r, zu_r);
        Eigen::VectorXd sr = ws.sigma(x, zl_r, zu_r) + Eigen::VectorXd::Constant(n, rho);
        if (!kkt.factorize(Hr, sr, ev.J, mu)) break;
        Eigen::VectorXd rr(n + m);
        rr.head(n) = -ws.barrierGradient(x, Eigen::VectorXd::Zero(n), mu_r);
        rr.tail(m) = -ev.c;
        const Eigen::VectorXd s = kkt.solve(rr);
        const Eigen::VectorXd dxr = s.head(n);
        double a = ws.maxStepPrimal(x, dxr, tau);
        bool moved = false;
        for (int b = 0; b < 40; ++b, a *= 0.5) {
          const Eigen::VectorXd xt = x + a * dxr;
          double ft;
          Eigen::VectorXd ct;
          if (!ws.evaluateTrial(xt, ft, ct)) continue;
          const double th = ct.lpNorm<1>();
          if (th < (1.0 - 1e-4 * a) * theta_r) {
            Eigen::VectorXd dzl_r, dzu_r;
            ws.boundDualStep(x, zl, zu, a * dxr, mu, dzl_r, dzu_r);
            const double az = ws.maxStepDual(zl, dzl_r, zu, dzu_r, tau);
            zl += az * dzl_r;
            zu += az * dzu_r;
            x = xt;
            ws.safeguardDuals(x, mu, zl, zu);
            theta_r = th;
            moved = true;
            const double ph = ws.barrier(xt, ft, mu);
            if (filterAccepts(filter, th, ph) && th <= 0.9 * theta) restored = true;
            break;
          }
        }
        if (!moved) break;
      }
      ev = ws.evaluate(x);
      if (!restored || !ev.finite) {
        return finish(SolverStatus::RestorationFailed, iter, "feasibility restoration failed");
      }
      y = leastSquaresMultipliers(ws, ev, zl, zu);
      if (y.size() != m) y = Eigen::VectorXd::Zero(m);
      restoration_last = true;
      result.log.push_back({iter, ev.f / ws.objScale(), unscaledInfeasibility(), dual, mu, 0.0,
                            kkt.regularization(), true});
      continue;
    }
    restoration_last = false;

    if (!armijo_step) filter.push_back({(1.0 - kGammaTheta) * theta, phi - kGammaPhi * theta});

    x = x_new;
    if (m > 0) y += alpha_primal_used * dy;
    zl += alpha_z * dzl;
    zu += alpha_z * dzu;
    ws.safeguardDuals(x, mu, zl, zu);
    ev = ws.evaluate(x);
    if (!ev.finite) return finish(SolverStatus::NumericalError, iter, "non-finite evaluation");

    result.log.push_back({iter, ev.f / ws.objScale(), unscaledInfeasibility(), dual, mu, alpha_primal_used,
                          kkt.regularization(), false});
    if (o.verbose) {
      std::fprintf(stderr, "%4d  f=% .8e  inf_pr=%.2e  inf_du=%.2e  mu=%.1e  alpha=%.2e  reg=%.1e\n", iter,
                   ev.f / ws.objScale(), unscaledInfeasibility(), dual, mu, alpha_primal_used, kkt.regularization());
    }
  }
  return finish(SolverStatus::MaxIterations, o.max_iterations, "iteration limit reached");
}

}  // namespace bsa::nlp
