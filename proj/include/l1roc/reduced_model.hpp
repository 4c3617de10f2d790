#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "l1roc/problem.hpp"

namespace l1roc {

/// Collocation nodes of a reduced model. Solution points come from the EIM
/// of the snapshots, residual points from the EIM of greedy residuals.
/// Nodes are listed in selection order.
struct CollocationSet {
  std::vector<Index> solution_points;
  std::vector<Index> residual_points;

  /// X^M: solution points followed by residual points.
  std::vector<Index> combined() const;
  std::size_t size() const noexcept { return solution_points.size() + residual_points.size(); }

  /// First n solution points and first n-1 residual points.
  CollocationSet truncated(std::size_t n) const;

  /// Throws InvalidArgument unless the nodes are distinct, inside [0, node_count)
  /// and there are n solution points and max(n-1, 0) residual points.
  void validate(Index node_count, std::size_t n) const;
};

struct GaussNewtonOptions {
  int max_iterations = 50;
  double residual_tolerance = 1e-12;
  double step_tolerance = 1e-12;
  double rank_threshold = 1e-12;  // relative pivot threshold of the minimal-norm solve
  int max_halvings = 30;
};

struct Coefficients {
  Eigen::VectorXd c;
  Parameter mu;
  std::optional<double> time;
  int iterations = 0;
  double residual_norm = 0.0;      // 2-norm of the reduced residual at c
  double residual_max_norm = 0.0;  // max-norm of the same vector
  bool degenerate = false;         // some step hit a rank-deficient Jacobian
};

/// Coefficient history of a reduced backward Euler run; column k is c(t_k).
struct ReducedTrajectory {
  Parameter mu;
  Eigen::MatrixXd coefficients;
  Index last_index = 0;
  std::vector<int> iterations;
  bool degenerate = false;
};

/// Reduced basis W_n with its collocation set and the operator blocks
/// restricted to the collocation nodes. Everything an online solve touches
/// has size M x n or M; the full basis is only used to reconstruct.
class ReducedModel {
 public:
  ReducedModel(std::shared_ptr<const Problem> problem, Eigen::MatrixXd basis, CollocationSet points);

  const Problem& problem() const noexcept { return *problem_; }
  std::shared_ptr<const Problem> problem_ptr() const noexcept { return problem_; }
  const Eigen::MatrixXd& basis() const noexcept { return basis_; }
  const CollocationSet& collocation() const noexcept { return points_; }
  const std::vector<Index>& points() const noexcept { return combined_; }
  Index n() const noexcept { return basis_.cols(); }
  Index M() const noexcept { return static_cast<Index>(combined_.size()); }

  /// P_* W_n.
  const Eigen::MatrixXd& restricted_basis() const noexcept { return restricted_basis_; }
  /// P_* (L_k W_n) for channel slot k of the problem.
  const Eigen::MatrixXd& channel_block(std::size_t slot) const { return blocks_.at(slot); }
  /// Dirichlet contribution of channel slot k at the collocation nodes.
  Eigen::VectorXd channel_affine(std::size_t slot, const Parameter& mu) const;
  /// f(X^M).
  const Eigen::VectorXd& restricted_forcing() const noexcept { return forcing_; }

  /// Model with the first n basis vectors and the matching collocation subset.
  ReducedModel truncated(Index n) const;

  Eigen::VectorXd reconstruct(const Eigen::VectorXd& c) const;
  /// Coefficients interpolating `u` at the solution points (unit lower-triangular solve).
  Eigen::VectorXd interpolate(const Eigen::VectorXd& u) const;

  /// Reduced residual P_*(P(W c; mu) - f), plus (W_M (c - c_prev)) / dt when
  /// `prev` is given.
  Eigen::VectorXd reduced_residual(const Eigen::VectorXd& c, const Parameter& mu,
                                   const Eigen::VectorXd* c_prev = nullptr,
                                   std::optional<double> dt = std::nullopt) const;
  Eigen::MatrixXd reduced_jacobian(const Eigen::VectorXd& c, const Parameter& mu,
                                   std::optional<double> dt = std::nullopt) const;

  /// Selected training parameters and, for transient models, the selected
  /// time indices (one per basis vector).
  std::vector<Parameter> parameters;
  std::vector<Index> time_indices;

  /// Upper-triangular S with snapshots = basis * S, when known. Column j
  /// holds the basis coefficients of the j-th selected snapshot.
  Eigen::MatrixXd snapshot_transform;

  /// Coefficients of W c in the snapshot basis (requires snapshot_transform).
  Eigen::VectorXd snapshot_coefficients(const Eigen::VectorXd& c) const;
  /// Basis coefficients of the trained snapshot nearest to mu (distance
  /// scaled by the box widths), or zero when no snapshots are recorded.
  Eigen::VectorXd initial_guess(const Parameter& mu) const;

  /// Writes basis.bin and model.json into `dir` (created if missing).
  void save(const std::filesystem::path& dir) const;
  static ReducedModel load(const std::filesystem::path& dir);

 /// Residual and/or Jacobian in one pass, without checking mu against the box.
  void evaluate(const Eigen::VectorXd& c, const Parameter& mu, const Eigen::VectorXd* c_prev,
                std::optional<double> dt, Eigen::VectorXd* R, Eigen::MatrixXd* J) const;

 private:

  struct BoundaryEntry {
    Index row;
    Index boundary_node;
    double weight;
  };

  std::shared_ptr<const Problem> problem_;
  Eigen::MatrixXd basis_;
  CollocationSet points_;
  std::vector<Index> combined_;
  Eigen::MatrixXd restricted_basis_;
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<std::vector<BoundaryEntry>> boundary_;
  Eigen::VectorXd forcing_;
};

/// Minimizes the reduced residual by Gauss-Newton with a halving line search,
/// starting from `initial` or else model.initial_guess(mu).
/// Throws ConvergenceError after `max_iterations`.
Coefficients solve_reduced(const ReducedModel& model, const Parameter& mu,
                           const Eigen::VectorXd* initial = nullptr, const GaussNewtonOptions& options = {});

/// Backward Euler on the coefficients, from a least-squares fit of the
/// initial state at X^M up to `stop_index` (all steps by default).
ReducedTrajectory solve_reduced_transient(const ReducedModel& model, const Parameter& mu,
                                          std::optional<Index> stop_index = std::nullopt,
                                          const GaussNewtonOptions& options = {});

/// Delta^L = ||c||_1.
double l1_indicator(const Eigen::VectorXd& c);

/// Max of ||c(t_k)||_1 over the listed time indices.
double l1t_indicator(const Eigen::MatrixXd& coefficients, std::span<const Index> time_indices);

}  // namespace l1roc
