#pragma once

#include <atomic>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "l1roc/problem.hpp"

namespace l1roc {

struct TruthOptions {
  /// Absolute bound on the residual max-norm. A round-off floor of
  /// `roundoff_factor * eps * residual_scale` is added, since on fine grids
  /// the cancelling terms of the residual are O(1/h^2) and 1e-10 absolute is
  /// below what double precision can resolve.
  double tolerance = 1e-10;
  double roundoff_factor = 64.0;
  int max_iterations = 100;
  /// Relative update threshold for the linearized iteration.
  double update_tolerance = 1e-10;
};

struct Snapshot {
  Eigen::VectorXd u;
  Parameter mu;
  std::optional<double> time;
  int iterations = 0;
  double residual_norm = 0.0;
  double tolerance = 0.0;
  std::vector<double> residual_history;  // max-norm before each iteration
};

/// States at t_0 .. t_last of a backward Euler run. Columns past
/// `last_index` are not yet computed.
struct Trajectory {
  Parameter mu;
  TimeGrid times;
  Eigen::MatrixXd states;
  Index last_index = 0;
  std::vector<int> iterations;  // Newton iterations per step, entry 0 unused

  Eigen::VectorXd state(Index k) const;
  bool complete() const noexcept { return last_index == times.steps; }
};

/// Full-order solver. Counts its invocations so that offline code can be
/// audited for how often it touches N-sized nonlinear systems.
class TruthSolver {
 public:
  explicit TruthSolver(TruthOptions options = {}) : options_(options) {}
  TruthSolver(const TruthSolver& other) : options_(other.options_) {}

  const TruthOptions& options() const noexcept { return options_; }

  /// Steady solve. For time-dependent problems this solves for the steady
  /// state of the same spatial operator.
  Snapshot solve_steady(const Problem& problem, const Parameter& mu,
                        const Eigen::VectorXd* initial_guess = nullptr) const;

  /// Backward Euler from the initial state up to `stop_index` (all steps by default).
  Trajectory solve_transient(const Problem& problem, const Parameter& mu,
                             std::optional<Index> stop_index = std::nullopt) const;

  /// Continues `trajectory` up to `stop_index`. Counts as an invocation only
  /// when new steps are actually computed.
  void extend(const Problem& problem, Trajectory& trajectory, Index stop_index) const;

  /// Residual tolerance accepted for state `u`.
  double tolerance_for(const Problem& problem, const Eigen::VectorXd& u, const Parameter& mu,
                       const Eigen::VectorXd* u_prev = nullptr, std::optional<double> dt = std::nullopt) const;

  std::size_t invocations() const noexcept { return calls_.load(); }
  void reset_invocations() noexcept { calls_.store(0); }

 private:
  TruthOptions options_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace l1roc
