#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "l1roc/offline.hpp"

namespace l1roc {

struct PodBasis {
  Eigen::MatrixXd modes;  // orthonormal columns
  Eigen::VectorXd singular_values;  // of the whole snapshot matrix, descending
  bool rank_limited = false;  // fewer than the requested modes were available
};

/// Leading N left singular vectors of the snapshot matrix (one snapshot per
/// column). Modes whose singular value is below `rank_tolerance` times the
/// largest are dropped.
PodBasis pod_basis(const Eigen::MatrixXd& snapshots, Index N, double rank_tolerance = 1e-12);

/// N distinct indices in [0, train_size), drawn without replacement.
std::vector<std::size_t> random_selection(std::size_t train_size, Index N, std::uint64_t seed);

/// Reduced model from N randomly drawn training parameters, with collocation
/// points from the same EIM pipeline as the greedy.
GreedyResult random_basis(std::shared_ptr<const Problem> problem, const std::vector<Parameter>& train, Index N,
                          std::uint64_t seed, const GreedyOptions& options, const TruthSolver& solver);

enum class ErrorMetric { linf_relative, frobenius_relative, l2_per_time };
std::string_view to_string(ErrorMetric metric);

struct ErrorCurve {
  std::vector<Index> n;
  std::vector<double> error;  // NaN when every test solve failed at that n
  std::vector<std::size_t> failures;  // reduced solves excluded at that n
  ErrorMetric metric = ErrorMetric::linf_relative;
  std::string basis_kind;
  std::optional<std::uint64_t> seed;
};

/// Truth solutions over a test set, computed once and shared by every curve.
struct References {
  std::vector<Parameter> parameters;
  std::vector<Eigen::MatrixXd> solutions;  // one column (steady) or one column per time level
};

References compute_references(const Problem& problem, const std::vector<Parameter>& test, const TruthSolver& solver,
                              int threads = 1);

/// max ||u - u_hat||_inf / max ||u||_inf over the test set (maxima taken separately).
double linf_relative(const std::vector<Eigen::VectorXd>& errors, const std::vector<Eigen::VectorXd>& truths);
/// ||E||_F / ||U||_F for space-time fields.
double frobenius_relative(const Eigen::MatrixXd& error, const Eigen::MatrixXd& truth);
/// sqrt(cell * sum_x e(x, t)^2) for every time column; `cell` is h (1D) or h1*h2 (2D).
Eigen::VectorXd l2_per_time(const Eigen::MatrixXd& error, double cell);

struct EvaluationOptions {
  int threads = 1;
  GaussNewtonOptions reduced;
  Index max_n = 0;  // 0: up to the model size
};

/// Online error over nested truncations n = 1..N. Steady problems use the
/// L-infinity metric; time-dependent ones the mean relative Frobenius error
/// over the test set. Failed reduced solves are counted, not fatal.
ErrorCurve evaluate_error(const ReducedModel& model, const References& refs, const EvaluationOptions& options = {});

/// Same metrics for the orthogonal projection of the references onto the
/// span of the first n columns of `basis`.
ErrorCurve projection_error(const Eigen::MatrixXd& basis, const References& refs, bool transient, Index max_n = 0);

/// Per-n best, median and worst over a set of curves (failed points ignored).
struct CurveSummary {
  ErrorCurve best, median, worst;
};
CurveSummary summarize(const std::vector<ErrorCurve>& curves);

/// Least-squares slope of log(error) against n and the R^2 of that fit
/// (points with missing or non-positive error are skipped).
struct LogLinearFit {
  double slope = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};
LogLinearFit log_linear_fit(const ErrorCurve& curve);

}  // namespace l1roc
