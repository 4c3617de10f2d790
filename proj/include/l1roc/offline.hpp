#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "l1roc/reduced_model.hpp"
#include "l1roc/truth_solver.hpp"

namespace l1roc {

struct EimResult {
  Eigen::VectorXd vector;  // vanishes at the prior points, 1 at `pivot`
  Index pivot = -1;
  /// v = basis * coefficients + scale * vector.
  Eigen::VectorXd coefficients;
  double scale = 0.0;
};

/// One interpolatory update: subtracts from `v` its interpolant in the
/// columns of `basis` at `points` (unit lower-triangular there), then
/// normalizes at the entry of largest magnitude outside `excluded`; ties go
/// to the lowest node index. Returns nullopt when what remains is below
/// `relative_tolerance * ||v||_inf`, i.e. v is already represented.
std::optional<EimResult> eim_update(const Eigen::VectorXd& v, const Eigen::MatrixXd& basis,
                                    std::span<const Index> points, std::span<const Index> excluded,
                                    double relative_tolerance = 1e-14);

enum class Indicator { l1, residual };
std::string_view to_string(Indicator indicator);
Indicator parse_indicator(std::string_view name);

/// Coordinates in which the L1 indicator measures the reduced solution:
/// `snapshot` uses the selected truth snapshots themselves as the basis (so a
/// trained parameter scores exactly 1), `basis` uses the EIM-normalized basis
/// the online solver works in.
enum class L1Coordinates { snapshot, basis };
std::string_view to_string(L1Coordinates coordinates);
L1Coordinates parse_l1_coordinates(std::string_view name);

/// Splits one master seed into independent streams (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

struct GreedyOptions {
  Index max_basis = 10;
  Indicator indicator = Indicator::l1;
  L1Coordinates l1_coordinates = L1Coordinates::snapshot;
  std::uint64_t seed = 0;
  int threads = 1;
  GaussNewtonOptions reduced;
  /// When non-empty, these training indices are used in order instead of
  /// the indicator sweep (random-selection baseline). Steady only.
  std::vector<std::size_t> fixed_sequence;
};

struct GreedyStep {
  Index n = 0;  // basis size after this step
  std::size_t parameter_index = 0;
  Parameter mu;
  std::optional<Index> time_index;
  int multiplicity = 1;  // times this parameter has been selected so far
  double indicator = std::numeric_limits<double>::quiet_NaN();  // value that won the sweep
  std::vector<double> indicators;  // sweep over the training set; NaN where not evaluated
  Index solution_point = -1;
  std::optional<Index> residual_point;
  double truth_seconds = 0.0;
  double sweep_seconds = 0.0;
  double cumulative_seconds = 0.0;
  std::size_t truth_invocations = 0;
  std::size_t sweep_failures = 0;  // reduced solves that hit the iteration cap
};

struct GreedyHistory {
  Indicator indicator = Indicator::l1;
  std::vector<GreedyStep> steps;
  bool stopped_early = false;
  std::string stop_reason;
  std::vector<Index> reduced_time_nodes;  // sorted; transient only
  double offline_seconds = 0.0;
};

struct GreedyResult {
  ReducedModel model;
  GreedyHistory history;
  std::vector<Eigen::VectorXd> snapshots;  // truth snapshots in selection order
  Eigen::MatrixXd residual_basis;          // EIM-normalized residuals, one column per residual point
};

/// Steady training loop: random first parameter, then repeated indicator
/// sweeps, truth solve at the argmax and two EIM updates (snapshot and
/// greedy residual). `solver` is used for every truth solve.
GreedyResult greedy_steady(std::shared_ptr<const Problem> problem, const std::vector<Parameter>& train,
                           const GreedyOptions& options, const TruthSolver& solver);
GreedyResult greedy_steady(std::shared_ptr<const Problem> problem, const std::vector<Parameter>& train,
                           const GreedyOptions& options);

/// Time-dependent training loop: parameters chosen by the L1 indicator over
/// the reduced time nodes, time nodes by the full residual of the reduced
/// trajectory. A parameter may be chosen again with a different time node.
GreedyResult greedy_transient(std::shared_ptr<const Problem> problem, const std::vector<Parameter>& train,
                              const GreedyOptions& options, const TruthSolver& solver);
GreedyResult greedy_transient(std::shared_ptr<const Problem> problem, const std::vector<Parameter>& train,
                              const GreedyOptions& options);

/// Full residuals of a reduced trajectory with the backward-difference time
/// term; column k is the residual of step k (column 0 is zero).
Eigen::MatrixXd full_residual_transient(const ReducedModel& model, const ReducedTrajectory& trajectory);

/// argmax over k = 1..last_index of ||residuals.col(k)||_inf, skipping
/// `taken`; the earliest index wins ties. nullopt when nothing is left.
std::optional<Index> select_time_node(const Eigen::MatrixXd& residuals, Index last_index,
                                     std::span<const Index> taken);

/// Time index with the largest spread max(u) - min(u); earliest on ties.
Index largest_variation_index(const Trajectory& trajectory);

}  // namespace l1roc
