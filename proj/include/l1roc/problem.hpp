#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "l1roc/grid.hpp"
#include "l1roc/parameter.hpp"

namespace l1roc {

enum class ProblemKind {
  steady_burgers,
  cubic_rd,
  poisson_boltzmann,
  nonlinear_convection,
  transient_burgers,
  transient_cubic_rd,
};

std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem_kind(std::string_view id);
std::vector<ProblemKind> all_problem_kinds();
bool is_transient(ProblemKind kind);

/// Linear quantities the pointwise nonlinearity of a problem depends on.
enum class Channel { value, grad_x, grad_y, laplacian, neighbor_mean };

/// Uniform time levels t_i = t0 + i * dt, i = 0..steps.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.0;
  Index steps = 0;

  /// Rejects final_time / dt that is not an integer (relative slack 1e-9).
  static TimeGrid make(double final_time, double dt);
  double time(Index i) const noexcept { return t0 + double(i) * dt; }
  double final_time() const noexcept { return time(steps); }
};

/// The two transient Burgers configurations: A has f = 0 on [0.1, 1] with
/// boundary values (-1, 1); B has f = 1 on [0.005, 1] with zero boundary values.
enum class BurgersSetup { a, b };

/// Everything needed to rebuild a problem. Unset optionals take the
/// problem's defaults (see README).
struct ProblemConfig {
  ProblemKind kind = ProblemKind::cubic_rd;
  Index K = 0;  // interior points per direction; 0 selects the default
  std::optional<ParameterBox> box;
  std::optional<double> forcing_constant;
  std::optional<double> final_time;
  std::optional<double> time_step;
  BurgersSetup burgers_setup = BurgersSetup::b;
  double initial_value = 0.0;

  friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

/// Default configuration with every optional filled in.
ProblemConfig resolved(ProblemConfig config);

/// A discretized parametrized PDE written as
///   residual(u; mu) = F(channels(u); mu) - f            (steady)
///   residual(u; mu) = (u - u_prev) / dt + F(...) - f    (backward Euler step)
/// where each channel is a linear difference operator applied to u plus its
/// Dirichlet contribution, and F acts node by node. The pointwise form lets
/// the reduced solver evaluate residual entries at a handful of nodes.
class Problem {
 public:
  virtual ~Problem() = default;

  ProblemKind kind() const noexcept { return config_.kind; }
  std::string_view id() const noexcept { return to_string(config_.kind); }
  const ProblemConfig& config() const noexcept { return config_; }
  const Grid& grid() const noexcept { return ops_->grid; }
  const DifferenceOperators& operators() const noexcept { return *ops_; }
  const ParameterBox& box() const noexcept { return *config_.box; }
  Index size() const noexcept { return grid().interior_count(); }

  const Eigen::VectorXd& forcing() const noexcept { return forcing_; }
  bool is_transient() const noexcept { return l1roc::is_transient(config_.kind); }
  const TimeGrid& time_grid() const;
  const Eigen::VectorXd& initial_state() const noexcept { return initial_; }

  const std::vector<Channel>& channels() const noexcept { return channels_; }
  const SparseOperator& channel_operator(std::size_t slot) const { return *channel_ops_[slot]; }

  virtual double boundary_value(Index boundary_node, const Parameter& mu) const = 0;
  Eigen::VectorXd boundary_values(const Parameter& mu) const;

  /// F and, when `dF` is given, its partial derivatives with respect to each
  /// channel. `ch` has one row per node and one column per channel.
  virtual void evaluate(const Eigen::MatrixXd& ch, const Parameter& mu, Eigen::VectorXd& F,
                        Eigen::MatrixXd* dF) const = 0;

  virtual bool symmetric_jacobian() const = 0;
  /// True when the truth solver should use the fixed-point linearization
  /// (full steps, update-based stopping) rather than damped Newton.
  virtual bool uses_linearized_iteration() const { return false; }
  virtual Eigen::VectorXd initial_guess(const Parameter& mu) const;

  /// Throws DomainError when mu is outside the box.
  void check_parameter(const Parameter& mu) const;

  Eigen::MatrixXd channel_values(const Eigen::VectorXd& u, const Parameter& mu) const;

  Eigen::VectorXd residual_full(const Eigen::VectorXd& u, const Parameter& mu) const;
  Eigen::VectorXd residual_full(const Eigen::VectorXd& u, const Parameter& mu,
                                const Eigen::VectorXd& u_prev, double dt) const;

  /// Residual entries at `nodes` from channel values already evaluated there.
  /// `time_term`, when given, is (u - u_prev) / dt at the same nodes.
  Eigen::VectorXd residual_at_points(std::span<const Index> nodes, const Eigen::MatrixXd& ch,
                                     const Parameter& mu,
                                     const Eigen::VectorXd* time_term = nullptr) const;

  SparseMatrix jacobian_full(const Eigen::VectorXd& u, const Parameter& mu,
                             std::optional<double> dt = std::nullopt) const;

  /// Size of the largest terms that cancel in the residual; round-off in the
  /// residual is a small multiple of epsilon times this.
  double residual_scale(const Eigen::VectorXd& u, const Parameter& mu,
                        const Eigen::VectorXd* u_prev = nullptr,
                        std::optional<double> dt = std::nullopt) const;

  friend struct ProblemFactory;

 protected:
  Problem(ProblemConfig config, std::shared_ptr<const DifferenceOperators> ops,
          std::vector<Channel> channels);
  void set_forcing(Eigen::VectorXd f) { forcing_ = std::move(f); }

 private:
  ProblemConfig config_;
  std::shared_ptr<const DifferenceOperators> ops_;
  std::vector<Channel> channels_;
  std::vector<const SparseOperator*> channel_ops_;
  SparseOperator identity_;
  Eigen::VectorXd forcing_;
  Eigen::VectorXd initial_;
  std::optional<TimeGrid> time_grid_;
};

std::shared_ptr<const Problem> make_problem(const ProblemConfig& config);

/// One-line summary per problem, for listings.
std::string describe(ProblemKind kind);

}  // namespace l1roc
