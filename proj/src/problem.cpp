#include "l1roc/problem.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "l1roc/errors.hpp"

namespace l1roc {

namespace {

constexpr std::array<std::pair<ProblemKind, std::string_view>, 6> kNames{{
    {ProblemKind::steady_burgers, "steady-burgers"},
    {ProblemKind::cubic_rd, "cubic-rd"},
    {ProblemKind::poisson_boltzmann, "poisson-boltzmann"},
    {ProblemKind::nonlinear_convection, "nonlinear-convection"},
    {ProblemKind::transient_burgers, "transient-burgers"},
    {ProblemKind::transient_cubic_rd, "transient-cubic-rd"},
}};

double sin_cos_forcing(double x1, double x2) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return 100.0 * std::sin(two_pi * x1) * std::cos(two_pi * x2);
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "unknown";
}

ProblemKind parse_problem_kind(std::string_view id) {
  for (const auto& [k, name] : kNames)
    if (name == id) return k;
  throw InvalidArgument("unknown problem '" + std::string(id) + "'");
}

std::vector<ProblemKind> all_problem_kinds() {
  std::vector<ProblemKind> out;
  for (const auto& [k, name] : kNames) out.push_back(k);
  return out;
}

bool is_transient(ProblemKind kind) {
  return kind == ProblemKind::transient_burgers || kind == ProblemKind::transient_cubic_rd;
}

std::string describe(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::steady_burgers:
      return "1D viscous Burgers on [-1,1], u(-1)=1, u(1)=-1; mu = viscosity in [0.05,1]";
    case ProblemKind::cubic_rd:
      return "-mu2 Lap u + u(u-mu1)^2 = 100 sin(2pi x1) cos(2pi x2) on [-1,1]^2; mu in [0.2,5]x[0.2,2]";
    case ProblemKind::poisson_boltzmann:
      return "D Lap u = sinh u + g, u=V on boundary, [-1,1]^2; mu=(V,D) in [0.5,5]x[0.0004,0.09]";
    case ProblemKind::nonlinear_convection:
      return "-mu2 Lap u + u(|grad u|+mu1)^1.5 = f on [-1,1]^2; mu in [10,40]x[1,5]";
    case ProblemKind::transient_burgers:
      return "u_t + u u_x = mu u_xx + f on (0,1); setup A: f=0, (alpha,beta)=(-1,1); setup B: f=1, zero BC";
    case ProblemKind::transient_cubic_rd:
      return "u_t - mu2 Lap u + u(u-mu1)^2 = f on [-1,1]^2, u0=0; mu in [1,5]x[0.2,1]";
  }
  return {};
}

TimeGrid TimeGrid::make(double final_time, double dt) {
  if (!(dt > 0.0) || !(final_time > 0.0)) throw InvalidArgument("time grid: T and dt must be positive");
  const double ratio = final_time / dt;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
    throw InvalidArgument("time grid: T / dt must be an integer");
  return TimeGrid{0.0, dt, static_cast<Index>(steps)};
}

ProblemConfig resolved(ProblemConfig c) {
  const auto set_box = [&](std::vector<Interval> b) {
    if (!c.box) c.box = ParameterBox(std::move(b));
  };
  switch (c.kind) {
    case ProblemKind::steady_burgers:
      if (c.K == 0) c.K = 100;
      set_box({{0.05, 1.0}});
      break;
    case ProblemKind::cubic_rd:
      if (c.K == 0) c.K = 64;
      set_box({{0.2, 5.0}, {0.2, 2.0}});
      break;
    case ProblemKind::poisson_boltzmann:
      if (c.K == 0) c.K = 64;
      set_box({{0.5, 5.0}, {0.02 * 0.02, 0.3 * 0.3}});
      break;
    case ProblemKind::nonlinear_convection:
      if (c.K == 0) c.K = 64;
      set_box({{10.0, 40.0}, {1.0, 5.0}});
      break;
    case ProblemKind::transient_burgers:
      if (c.K == 0) c.K = 200;
      if (c.burgers_setup == BurgersSetup::a) {
        set_box({{0.1, 1.0}});
        if (!c.final_time) c.final_time = 1.0;
        if (!c.time_step) c.time_step = 1e-4;
      } else {
        set_box({{0.005, 1.0}});
        if (!c.final_time) c.final_time = 2.0;
        if (!c.time_step) c.time_step = 1e-3;
      }
      break;
    case ProblemKind::transient_cubic_rd:
      if (c.K == 0) c.K = 64;
      set_box({{1.0, 5.0}, {0.2, 1.0}});
      if (!c.final_time) c.final_time = 1.0;
      if (!c.time_step) c.time_step = 0.01;
      break;
  }
  return c;
}

Problem::Problem(ProblemConfig config, std::shared_ptr<const DifferenceOperators> ops,
                 std::vector<Channel> channels)
    : config_(std::move(config)), ops_(std::move(ops)), channels_(std::move(channels)) {
  const Index n = ops_->grid.interior_count();
  identity_.interior.resize(n, n);
  identity_.interior.setIdentity();
  identity_.boundary.resize(n, ops_->grid.boundary_count());
  for (Channel c : channels_) {
    switch (c) {
      case Channel::value: channel_ops_.push_back(&identity_); break;
      case Channel::grad_x: channel_ops_.push_back(&ops_->gradient.at(0)); break;
      case Channel::grad_y: channel_ops_.push_back(&ops_->gradient.at(1)); break;
      case Channel::laplacian: channel_ops_.push_back(&ops_->laplacian); break;
      case Channel::neighbor_mean: channel_ops_.push_back(&ops_->neighbor_mean); break;
    }
  }
  forcing_ = Eigen::VectorXd::Zero(n);
  initial_ = Eigen::VectorXd::Constant(n, config_.initial_value);
  if (l1roc::is_transient(config_.kind)) time_grid_ = TimeGrid::make(*config_.final_time, *config_.time_step);
}

const TimeGrid& Problem::time_grid() const {
  if (!time_grid_) throw InvalidArgument(std::string(id()) + " is not time dependent");
  return *time_grid_;
}

Eigen::VectorXd Problem::boundary_values(const Parameter& mu) const {
  Eigen::VectorXd g(grid().boundary_count());
  for (Index b = 0; b < g.size(); ++b) g[b] = boundary_value(b, mu);
  return g;
}

Eigen::VectorXd Problem::initial_guess(const Parameter&) const { return Eigen::VectorXd::Zero(size()); }

void Problem::check_parameter(const Parameter& mu) const {
  if (mu.size() != box().dimension())
    throw InvalidArgument(std::string(id()) + ": parameter must have " + std::to_string(box().dimension()) +
                          " components");
  if (!box().contains(mu)) throw DomainError(std::string(id()) + ": parameter " + mu.to_string() + " outside domain");
}

Eigen::MatrixXd Problem::channel_values(const Eigen::VectorXd& u, const Parameter& mu) const {
  if (u.size() != size()) throw InvalidArgument("channel_values: state has wrong length");
  const Eigen::VectorXd g = boundary_values(mu);
  Eigen::MatrixXd ch(size(), static_cast<Index>(channels_.size()));
  for (std::size_t k = 0; k < channels_.size(); ++k) {
    if (channels_[k] == Channel::value) ch.col(static_cast<Index>(k)) = u;
    else ch.col(static_cast<Index>(k)) = channel_ops_[k]->apply(u, g);
  }
  return ch;
}

Eigen::VectorXd Problem::residual_full(const Eigen::VectorXd& u, const Parameter& mu) const {
  check_parameter(mu);
  const Eigen::MatrixXd ch = channel_values(u, mu);
  Eigen::VectorXd F;
  evaluate(ch, mu, F, nullptr);
  return F - forcing_;
}

Eigen::VectorXd Problem::residual_full(const Eigen::VectorXd& u, const Parameter& mu,
                                       const Eigen::VectorXd& u_prev, double dt) const {
  if (u_prev.size() != size()) throw InvalidArgument("residual_full: previous state has wrong length");
  if (!(dt > 0.0)) throw InvalidArgument("residual_full: dt must be positive");
  Eigen::VectorXd r = residual_full(u, mu);
  r += (u - u_prev) / dt;
  return r;
}

Eigen::VectorXd Problem::residual_at_points(std::span<const Index> nodes, const Eigen::MatrixXd& ch,
                                            const Parameter& mu, const Eigen::VectorXd* time_term) const {
  check_parameter(mu);
  const auto m = static_cast<Index>(nodes.size());
  if (ch.rows() != m || ch.cols() != static_cast<Index>(channels_.size()))
    throw InvalidArgument("residual_at_points: channel matrix has wrong shape");
  if (time_term && time_term->size() != m) throw InvalidArgument("residual_at_points: time term has wrong length");
  Eigen::VectorXd F;
  evaluate(ch, mu, F, nullptr);
  for (Index i = 0; i < m; ++i) {
    const Index node = nodes[static_cast<std::size_t>(i)];
    if (node < 0 || node >= size()) throw InvalidArgument("residual_at_points: node index out of range");
    F[i] -= forcing_[node];
  }
  if (time_term) F += *time_term;
  return F;
}

SparseMatrix Problem::jacobian_full(const Eigen::VectorXd& u, const Parameter& mu, std::optional<double> dt) const {
  check_parameter(mu);
  const Eigen::MatrixXd ch = channel_values(u, mu);
  Eigen::VectorXd F;
  Eigen::MatrixXd dF;
  evaluate(ch, mu, F, &dF);
  SparseMatrix J(size(), size());
  for (std::size_t k = 0; k < channels_.size(); ++k) {
    const SparseMatrix scaled = dF.col(static_cast<Index>(k)).asDiagonal() * channel_ops_[k]->interior;
    J += scaled;
  }
  if (dt) {
    if (!(*dt > 0.0)) throw InvalidArgument("jacobian_full: dt must be positive");
    SparseMatrix I(size(), size());
    I.setIdentity();
    J += I / *dt;
  }
  J.makeCompressed();
  return J;
}

double Problem::residual_scale(const Eigen::VectorXd& u, const Parameter& mu, const Eigen::VectorXd* u_prev,
                               std::optional<double> dt) const {
  const Eigen::MatrixXd ch = channel_values(u, mu);
  Eigen::VectorXd F;
  Eigen::MatrixXd dF;
  evaluate(ch, mu, F, &dF);
  const Eigen::VectorXd g = boundary_values(mu).cwiseAbs();
  const Eigen::VectorXd ua = u.cwiseAbs();
  Eigen::VectorXd s = F.cwiseAbs() + forcing_.cwiseAbs();
  for (std::size_t k = 0; k < channels_.size(); ++k) {
    const auto& op = *channel_ops_[k];
    Eigen::VectorXd mag = op.interior.cwiseAbs() * ua;
    if (op.boundary.nonZeros() > 0) mag += op.boundary.cwiseAbs() * g;
    s += dF.col(static_cast<Index>(k)).cwiseAbs().cwiseProduct(mag);
  }
  if (dt && u_prev) s += (ua + u_prev->cwiseAbs()) / *dt;
  return s.size() > 0 ? s.maxCoeff() : 0.0;
}

namespace {

// Conservative Burgers flux (u^2/2)_x - mu u_xx, written through the neighbour
// mean m and the centered difference d: m * d = (u_{i+1}^2 - u_{i-1}^2) / (4h).
class BurgersProblem final : public Problem {
 public:
  BurgersProblem(ProblemConfig c, std::shared_ptr<const DifferenceOperators> ops, double left, double right)
      : Problem(std::move(c), std::move(ops), {Channel::neighbor_mean, Channel::grad_x, Channel::laplacian}),
        left_(left),
        right_(right) {}

  double boundary_value(Index b, const Parameter&) const override { return b == 0 ? left_ : right_; }

  void evaluate(const Eigen::MatrixXd& ch, const Parameter& mu, Eigen::VectorXd& F,
                Eigen::MatrixXd* dF) const override {
    const double nu = mu[0];
    F = ch.col(0).cwiseProduct(ch.col(1)) - nu * ch.col(2);
    if (dF) {
      dF->resize(ch.rows(), 3);
      dF->col(0) = ch.col(1);
      dF->col(1) = ch.col(0);
      dF->col(2).setConstant(-nu);
    }
  }

  bool symmetric_jacobian() const override { return false; }

  Eigen::VectorXd initial_guess(const Parameter&) const override {
    const auto& g = grid();
    const double a = g.bounds(0).lo, b = g.bounds(0).hi;
    Eigen::VectorXd u(size());
    for (Index i = 0; i < size(); ++i) {
      const double s = (g.coord(i, 0) - a) / (b - a);
      u[i] = (1.0 - s) * left_ + s * right_;
    }
    return u;
  }

 private:
  double left_;
  double right_;
};

// -mu2 Lap u + u (u - mu1)^2; mu = (mu1, mu2).
class CubicProblem final : public Problem {
 public:
  CubicProblem(ProblemConfig c, std::shared_ptr<const DifferenceOperators> ops)
      : Problem(std::move(c), std::move(ops), {Channel::value, Channel::laplacian}) {}

  double boundary_value(Index, const Parameter&) const override { return 0.0; }

  void evaluate(const Eigen::MatrixXd& ch, const Parameter& mu, Eigen::VectorXd& F,
                Eigen::MatrixXd* dF) const override {
    const double m1 = mu[0], m2 = mu[1];
    const auto u = ch.col(0).array();
    const auto d = u - m1;
    F = (u * d * d - m2 * ch.col(1).array()).matrix();
    if (dF) {
      dF->resize(ch.rows(), 2);
      dF->col(0) = (d * d + 2.0 * u * d).matrix();
      dF->col(1).setConstant(-m2);
    }
  }

  bool symmetric_jacobian() const override { return true; }
  bool uses_linearized_iteration() const override { return true; }
};

// D Lap u - sinh u = g with u = V on the boundary; mu = (V, D).
class PoissonBoltzmannProblem final : public Problem {
 public:
  PoissonBoltzmannProblem(ProblemConfig c, std::shared_ptr<const DifferenceOperators> ops)
      : Problem(std::move(c), std::move(ops), {Channel::value, Channel::laplacian}) {}

  double boundary_value(Index, const Parameter& mu) const override { return mu[0]; }

  void evaluate(const Eigen::MatrixXd& ch, const Parameter& mu, Eigen::VectorXd& F,
                Eigen::MatrixXd* dF) const override {
    const double D = mu[1];
    const auto u = ch.col(0).array();
    F = (D * ch.col(1).array() - u.sinh()).matrix();
    if (dF) {
      dF->resize(ch.rows(), 2);
      dF->col(0) = (-u.cosh()).matrix();
      dF->col(1).setConstant(D);
    }
  }

  bool symmetric_jacobian() const override { return true; }
};

// -mu2 Lap u + u (|grad u| + mu1)^1.5.
class ConvectionProblem final : public Problem {
 public:
  ConvectionProblem(ProblemConfig c, std::shared_ptr<const DifferenceOperators> ops)
      : Problem(std::move(c), std::move(ops), {Channel::value, Channel::grad_x, Channel::grad_y, Channel::laplacian}) {}

  double boundary_value(Index, const Parameter&) const override { return 0.0; }

  void evaluate(const Eigen::MatrixXd& ch, const Parameter& mu, Eigen::VectorXd& F,
                Eigen::MatrixXd* dF) const override {
    const double m1 = mu[0], m2 = mu[1];
    const Index n = ch.rows();
    F.resize(n);
    if (dF) dF->resize(n, 4);
    for (Index i = 0; i < n; ++i) {
      const double u = ch(i, 0), gx = ch(i, 1), gy = ch(i, 2);
      const double s = std::hypot(gx, gy);
      const double q = s + m1;
      const double q15 = q * std::sqrt(q);
      F[i] = u * q15 - m2 * ch(i, 3);
      if (dF) {
        // |grad u| is not differentiable at 0; use the zero subgradient there
        const double w = s > 0.0 ? 1.5 * u * std::sqrt(q) / s : 0.0;
        (*dF)(i, 0) = q15;
        (*dF)(i, 1) = w * gx;
        (*dF)(i, 2) = w * gy;
        (*dF)(i, 3) = -m2;
      }
    }
  }

  bool symmetric_jacobian() const override { return false; }
};

Eigen::VectorXd sample(const Grid& g, double (*fn)(double, double)) {
  Eigen::VectorXd f(g.interior_count());
  for (Index i = 0; i < f.size(); ++i) f[i] = fn(g.coord(i, 0), g.dim() == 2 ? g.coord(i, 1) : 0.0);
  return f;
}

double pb_source(double x1, double x2) {
  return std::exp(-50.0 * ((x1 - 0.2) * (x1 - 0.2) + (x2 + 0.1) * (x2 + 0.1)));
}

}  // namespace

// set_forcing is protected; problems are only assembled here.
struct ProblemFactory {
  static void set_forcing(Problem& p, Eigen::VectorXd f) { p.set_forcing(std::move(f)); }
};

std::shared_ptr<const Problem> make_problem(const ProblemConfig& raw) {
  const ProblemConfig c = resolved(raw);
  const Interval unit{-1.0, 1.0};
  std::shared_ptr<Problem> p;
  Eigen::VectorXd f;
  switch (c.kind) {
    case ProblemKind::steady_burgers: {
      const auto ops = DifferenceOperators::build(Grid::make(1, c.K, unit));
      if (c.box->dimension() != 1) throw InvalidArgument("steady-burgers: parameter box must be 1D");
      p = std::make_shared<BurgersProblem>(c, ops, 1.0, -1.0);
      f = Eigen::VectorXd::Zero(ops->grid.interior_count());
      break;
    }
    case ProblemKind::transient_burgers: {
      const auto ops = DifferenceOperators::build(Grid::make(1, c.K, Interval{0.0, 1.0}));
      if (c.box->dimension() != 1) throw InvalidArgument("transient-burgers: parameter box must be 1D");
      const bool a = c.burgers_setup == BurgersSetup::a;
      p = std::make_shared<BurgersProblem>(c, ops, a ? -1.0 : 0.0, a ? 1.0 : 0.0);
      f = Eigen::VectorXd::Constant(ops->grid.interior_count(), a ? 0.0 : 1.0);
      break;
    }
    case ProblemKind::cubic_rd:
    case ProblemKind::transient_cubic_rd: {
      const auto ops = DifferenceOperators::build(Grid::make(2, c.K, unit));
      if (c.box->dimension() != 2) throw InvalidArgument("cubic-rd: parameter box must be 2D");
      p = std::make_shared<CubicProblem>(c, ops);
      f = sample(ops->grid, &sin_cos_forcing);
      break;
    }
    case ProblemKind::poisson_boltzmann: {
      const auto ops = DifferenceOperators::build(Grid::make(2, c.K, unit));
      if (c.box->dimension() != 2) throw InvalidArgument("poisson-boltzmann: parameter box must be 2D");
      p = std::make_shared<PoissonBoltzmannProblem>(c, ops);
      f = sample(ops->grid, &pb_source);
      break;
    }
    case ProblemKind::nonlinear_convection: {
      const auto ops = DifferenceOperators::build(Grid::make(2, c.K, unit));
      if (c.box->dimension() != 2) throw InvalidArgument("nonlinear-convection: parameter box must be 2D");
      p = std::make_shared<ConvectionProblem>(c, ops);
      f = sample(ops->grid, &sin_cos_forcing);
      break;
    }
  }
  if (c.forcing_constant) f.setConstant(*c.forcing_constant);
  ProblemFactory::set_forcing(*p, std::move(f));
  return p;
}

}  // namespace l1roc
