#include "l1roc/truth_solver.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "l1roc/errors.hpp"

namespace l1roc {

Eigen::VectorXd Trajectory::state(Index k) const {
  if (k < 0 || k > last_index) throw InvalidArgument("trajectory: time index " + std::to_string(k) + " not computed");
  return states.col(k);
}

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;

// Linear solves inside the nonlinear iteration. The sparsity pattern of the
// Jacobian is fixed for a problem, so the symbolic analysis is done once.
class JacobianSolver {
 public:
  explicit JacobianSolver(const Problem& p) : tridiagonal_(p.grid().dim() == 1), symmetric_(p.symmetric_jacobian()) {}

  Eigen::VectorXd solve(const SparseMatrix& J, const Eigen::VectorXd& rhs) {
    if (tridiagonal_) return solve_tridiagonal(J, rhs);
    const ColMatrix A = J;
    if (symmetric_ && !ldlt_failed_) {
      if (!analyzed_) {
        ldlt_.analyzePattern(A);
        analyzed_ = true;
      }
      ldlt_.factorize(A);
      if (ldlt_.info() == Eigen::Success) {
        Eigen::VectorXd x = ldlt_.solve(rhs);
        if (x.allFinite()) return x;
      }
      ldlt_failed_ = true;  // indefinite with a zero pivot: fall back to LU for good
    }
    if (!lu_analyzed_) {
      lu_.analyzePattern(A);
      lu_analyzed_ = true;
    }
    lu_.factorize(A);
    if (lu_.info() != Eigen::Success) throw std::runtime_error("truth solver: singular Jacobian");
    return lu_.solve(rhs);
  }

 private:
  static Eigen::VectorXd solve_tridiagonal(const SparseMatrix& J, const Eigen::VectorXd& rhs) {
    const Index n = J.rows();
    Eigen::VectorXd lower = Eigen::VectorXd::Zero(n), diag = Eigen::VectorXd::Zero(n),
                    upper = Eigen::VectorXd::Zero(n);
    for (Index r = 0; r < n; ++r) {
      for (SparseMatrix::InnerIterator it(J, r); it; ++it) {
        if (it.col() == r) diag[r] = it.value();
        else if (it.col() == r - 1) lower[r] = it.value();
        else if (it.col() == r + 1) upper[r] = it.value();
        else throw InvalidArgument("truth solver: 1D Jacobian is not tridiagonal");
      }
    }
    // Thomas algorithm
    Eigen::VectorXd c(n), d(n);
    double beta = diag[0];
    if (beta == 0.0) throw std::runtime_error("truth solver: zero pivot in tridiagonal solve");
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for (Index i = 1; i < n; ++i) {
      beta = diag[i] - lower[i] * c[i - 1];
      if (beta == 0.0) throw std::runtime_error("truth solver: zero pivot in tridiagonal solve");
      c[i] = upper[i] / beta;
      d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    Eigen::VectorXd x(n);
    x[n - 1] = d[n - 1];
    for (Index i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
    return x;
  }

  bool tridiagonal_;
  bool symmetric_;
  bool analyzed_ = false;
  bool lu_analyzed_ = false;
  bool ldlt_failed_ = false;
  Eigen::SimplicialLDLT<ColMatrix> ldlt_;
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

struct StepContext {
  const Eigen::VectorXd* u_prev = nullptr;
  std::optional<double> dt;
};

struct NonlinearResult {
  Eigen::VectorXd u;
  int iterations = 0;
  double residual_norm = 0.0;
  double tolerance = 0.0;
  std::vector<double> history;
};

Eigen::VectorXd step_residual(const Problem& p, const Eigen::VectorXd& u, const Parameter& mu, const StepContext& s) {
  return s.dt ? p.residual_full(u, mu, *s.u_prev, *s.dt) : p.residual_full(u, mu);
}

NonlinearResult nonlinear_solve(const Problem& p, const Parameter& mu, Eigen::VectorXd u, const StepContext& s,
                                const TruthSolver& solver, JacobianSolver& linear) {
  const auto& opt = solver.options();
  const bool linearized = p.uses_linearized_iteration();
  NonlinearResult out;
  double update = std::numeric_limits<double>::infinity();
  Eigen::VectorXd R = step_residual(p, u, mu, s);
  for (int it = 0;; ++it) {
    const double rn = R.lpNorm<Eigen::Infinity>();
    out.history.push_back(rn);
    if (!std::isfinite(rn)) throw ConvergenceError("truth solver: residual is not finite", u, rn, it);
    const double tol = solver.tolerance_for(p, u, mu, s.u_prev, s.dt);
    const bool done = linearized ? (rn <= tol && (it > 0 ? update < opt.update_tolerance : true)) : rn <= tol;
    if (done) {
      out.u = std::move(u);
      out.iterations = it;
      out.residual_norm = rn;
      out.tolerance = tol;
      return out;
    }
    if (it == opt.max_iterations)
      throw ConvergenceError("truth solver: no convergence in " + std::to_string(it) + " iterations", u, rn, it);

    const SparseMatrix J = p.jacobian_full(u, mu, s.dt);
    const Eigen::VectorXd delta = linear.solve(J, -R);
    if (linearized) {
      // Solving J(u_l) u_{l+1} = J(u_l) u_l - R(u_l) in update form.
      u += delta;
      update = delta.lpNorm<Eigen::Infinity>() / std::max(1.0, u.lpNorm<Eigen::Infinity>());
      R = step_residual(p, u, mu, s);
      continue;
    }
    // damped Newton: halve until the residual 2-norm decreases
    const double r2 = R.norm();
    double alpha = 1.0;
    Eigen::VectorXd trial = u + delta;
    Eigen::VectorXd Rt = step_residual(p, trial, mu, s);
    for (int k = 0; k < 30 && !(Rt.allFinite() && Rt.norm() < (1.0 - 1e-4 * alpha) * r2); ++k) {
      alpha *= 0.5;
      trial = u + alpha * delta;
      Rt = step_residual(p, trial, mu, s);
    }
    update = alpha * delta.lpNorm<Eigen::Infinity>() / std::max(1.0, trial.lpNorm<Eigen::Infinity>());
    u = std::move(trial);
    R = std::move(Rt);
  }
}

}  // namespace

double TruthSolver::tolerance_for(const Problem& problem, const Eigen::VectorXd& u, const Parameter& mu,
                                  const Eigen::VectorXd* u_prev, std::optional<double> dt) const {
  const double eps = std::numeric_limits<double>::epsilon();
  return options_.tolerance + options_.roundoff_factor * eps * problem.residual_scale(u, mu, u_prev, dt);
}

Snapshot TruthSolver::solve_steady(const Problem& problem, const Parameter& mu,
                                   const Eigen::VectorXd* initial_guess) const {
  problem.check_parameter(mu);
  calls_.fetch_add(1);
  Eigen::VectorXd u0 = initial_guess ? *initial_guess : problem.initial_guess(mu);
  if (u0.size() != problem.size()) throw InvalidArgument("solve_steady: initial guess has wrong length");
  JacobianSolver linear(problem);
  auto r = nonlinear_solve(problem, mu, std::move(u0), {}, *this, linear);
  Snapshot s;
  s.u = std::move(r.u);
  s.mu = mu;
  s.iterations = r.iterations;
  s.residual_norm = r.residual_norm;
  s.tolerance = r.tolerance;
  s.residual_history = std::move(r.history);
  return s;
}

Trajectory TruthSolver::solve_transient(const Problem& problem, const Parameter& mu,
                                        std::optional<Index> stop_index) const {
  problem.check_parameter(mu);
  const TimeGrid& tg = problem.time_grid();
  Trajectory t;
  t.mu = mu;
  t.times = tg;
  t.states.resize(problem.size(), tg.steps + 1);
  t.states.col(0) = problem.initial_state();
  t.last_index = 0;
  t.iterations.assign(static_cast<std::size_t>(tg.steps + 1), 0);
  extend(problem, t, stop_index.value_or(tg.steps));
  return t;
}

void TruthSolver::extend(const Problem& problem, Trajectory& t, Index stop_index) const {
  if (stop_index < 0 || stop_index > t.times.steps) throw InvalidArgument("extend: stop index out of range");
  if (stop_index <= t.last_index) return;
  calls_.fetch_add(1);
  JacobianSolver linear(problem);
  const double dt = t.times.dt;
  for (Index k = t.last_index + 1; k <= stop_index; ++k) {
    const Eigen::VectorXd prev = t.states.col(k - 1);
    StepContext ctx{&prev, dt};
    try {
      auto r = nonlinear_solve(problem, t.mu, prev, ctx, *this, linear);
      t.states.col(k) = r.u;
      t.iterations[static_cast<std::size_t>(k)] = r.iterations;
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(std::string(e.what()) + " at time index " + std::to_string(k), e.last_iterate(),
                             e.residual_norm(), e.iterations(), k);
    }
    t.last_index = k;
  }
}

}  // namespace l1roc
