#include "l1roc/reduced_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include <Eigen/QR>

#include "json_convert.hpp"
#include "l1roc/errors.hpp"
#include "l1roc/matrix_io.hpp"

namespace l1roc {

std::vector<Index> CollocationSet::combined() const {
  std::vector<Index> out(solution_points);
  out.insert(out.end(), residual_points.begin(), residual_points.end());
  return out;
}

CollocationSet CollocationSet::truncated(std::size_t n) const {
  if (n == 0 || n > solution_points.size()) throw InvalidArgument("collocation: cannot truncate to " + std::to_string(n));
  CollocationSet out;
  out.solution_points.assign(solution_points.begin(), solution_points.begin() + static_cast<std::ptrdiff_t>(n));
  const std::size_t r = std::min(n - 1, residual_points.size());
  out.residual_points.assign(residual_points.begin(), residual_points.begin() + static_cast<std::ptrdiff_t>(r));
  return out;
}

void CollocationSet::validate(Index node_count, std::size_t n) const {
  if (solution_points.size() != n) throw InvalidArgument("collocation: expected " + std::to_string(n) + " solution points");
  if (residual_points.size() != (n == 0 ? 0 : n - 1))
    throw InvalidArgument("collocation: expected " + std::to_string(n == 0 ? 0 : n - 1) + " residual points");
  std::set<Index> seen;
  for (Index i : combined()) {
    if (i < 0 || i >= node_count) throw InvalidArgument("collocation: node " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second) throw InvalidArgument("collocation: node " + std::to_string(i) + " listed twice");
  }
}

ReducedModel::ReducedModel(std::shared_ptr<const Problem> problem, Eigen::MatrixXd basis, CollocationSet points)
    : problem_(std::move(problem)), basis_(std::move(basis)), points_(std::move(points)) {
  if (!problem_) throw InvalidArgument("reduced model: null problem");
  if (basis_.rows() != problem_->size()) throw InvalidArgument("reduced model: basis rows do not match the grid");
  if (basis_.cols() < 1) throw InvalidArgument("reduced model: empty basis");
  points_.validate(problem_->size(), static_cast<std::size_t>(basis_.cols()));
  combined_ = points_.combined();

  const Index m = M();
  restricted_basis_.resize(m, n());
  forcing_.resize(m);
  for (Index r = 0; r < m; ++r) {
    restricted_basis_.row(r) = basis_.row(combined_[static_cast<std::size_t>(r)]);
    forcing_[r] = problem_->forcing()[combined_[static_cast<std::size_t>(r)]];
  }
  const auto& channels = problem_->channels();
  blocks_.resize(channels.size());
  boundary_.resize(channels.size());
  for (std::size_t k = 0; k < channels.size(); ++k) {
    if (channels[k] == Channel::value) {
      blocks_[k] = restricted_basis_;
      continue;
    }
    const SparseOperator& op = problem_->channel_operator(k);
    Eigen::MatrixXd block(m, n());
    for (Index r = 0; r < m; ++r) {
      const Index node = combined_[static_cast<std::size_t>(r)];
      block.row(r) = op.interior.row(node) * basis_;
      for (SparseMatrix::InnerIterator it(op.boundary, node); it; ++it)
        boundary_[k].push_back({r, it.col(), it.value()});
    }
    blocks_[k] = std::move(block);
  }
}

Eigen::VectorXd ReducedModel::channel_affine(std::size_t slot, const Parameter& mu) const {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(M());
  for (const auto& e : boundary_.at(slot)) a[e.row] += e.weight * problem_->boundary_value(e.boundary_node, mu);
  return a;
}

ReducedModel ReducedModel::truncated(Index n) const {
  if (n < 1 || n > this->n()) throw InvalidArgument("reduced model: cannot truncate to n = " + std::to_string(n));
  ReducedModel out(problem_, basis_.leftCols(n), points_.truncated(static_cast<std::size_t>(n)));
  if (!parameters.empty()) out.parameters.assign(parameters.begin(), parameters.begin() + std::min<std::ptrdiff_t>(n, std::ssize(parameters)));
  if (!time_indices.empty()) out.time_indices.assign(time_indices.begin(), time_indices.begin() + std::min<std::ptrdiff_t>(n, std::ssize(time_indices)));
  if (snapshot_transform.size()) out.snapshot_transform = snapshot_transform.topLeftCorner(n, n);
  return out;
}

Eigen::VectorXd ReducedModel::reconstruct(const Eigen::VectorXd& c) const {
  if (c.size() != n()) throw InvalidArgument("reconstruct: expected " + std::to_string(n()) + " coefficients");
  return basis_ * c;
}

Eigen::VectorXd ReducedModel::snapshot_coefficients(const Eigen::VectorXd& c) const {
  if (snapshot_transform.rows() != n() || snapshot_transform.cols() != n())
    throw InvalidArgument("snapshot_coefficients: model has no snapshot transform");
  if (c.size() != n()) throw InvalidArgument("snapshot_coefficients: expected " + std::to_string(n()) + " coefficients");
  return snapshot_transform.triangularView<Eigen::Upper>().solve(c);
}

Eigen::VectorXd ReducedModel::interpolate(const Eigen::VectorXd& u) const {
  if (u.size() != basis_.rows()) throw InvalidArgument("interpolate: state has wrong length");
  const Index nn = n();
  Eigen::MatrixXd Ws(nn, nn);
  Eigen::VectorXd us(nn);
  for (Index i = 0; i < nn; ++i) {
    Ws.row(i) = basis_.row(points_.solution_points[static_cast<std::size_t>(i)]);
    us[i] = u[points_.solution_points[static_cast<std::size_t>(i)]];
  }
  return Ws.triangularView<Eigen::Lower>().solve(us);
}

void ReducedModel::evaluate(const Eigen::VectorXd& c, const Parameter& mu, const Eigen::VectorXd* c_prev,
                                         std::optional<double> dt, Eigen::VectorXd* R, Eigen::MatrixXd* J) const {
  if (c.size() != n()) throw InvalidArgument("reduced residual: expected " + std::to_string(n()) + " coefficients");
  const std::size_t nch = blocks_.size();
  Eigen::MatrixXd ch(M(), static_cast<Index>(nch));
  for (std::size_t k = 0; k < nch; ++k) {
    ch.col(static_cast<Index>(k)) = blocks_[k] * c;
    if (!boundary_[k].empty()) ch.col(static_cast<Index>(k)) += channel_affine(k, mu);
  }
  Eigen::VectorXd F;
  Eigen::MatrixXd dF;
  problem_->evaluate(ch, mu, F, J ? &dF : nullptr);
  if (R) {
    *R = F - forcing_;
    if (dt) {
      if (!c_prev || c_prev->size() != n()) throw InvalidArgument("reduced residual: previous coefficients missing");
      *R += restricted_basis_ * ((c - *c_prev) / *dt);
    }
  }
  if (J) {
    J->setZero(M(), n());
    for (std::size_t k = 0; k < nch; ++k) J->noalias() += dF.col(static_cast<Index>(k)).asDiagonal() * blocks_[k];
    if (dt) *J += restricted_basis_ / *dt;
  }
}

Eigen::VectorXd ReducedModel::reduced_residual(const Eigen::VectorXd& c, const Parameter& mu,
                                               const Eigen::VectorXd* c_prev, std::optional<double> dt) const {
  problem_->check_parameter(mu);
  Eigen::VectorXd R;
  evaluate(c, mu, c_prev, dt, &R, nullptr);
  return R;
}

Eigen::MatrixXd ReducedModel::reduced_jacobian(const Eigen::VectorXd& c, const Parameter& mu,
                                               std::optional<double> dt) const {
  problem_->check_parameter(mu);
  Eigen::MatrixXd J;
  evaluate(c, mu, nullptr, dt, nullptr, &J);
  return J;
}

namespace {

struct GaussNewtonResult {
  Eigen::VectorXd c;
  int iterations = 0;
  Eigen::VectorXd residual;
  bool degenerate = false;
};

// Residual/Jacobian callback for one nonlinear least-squares problem.
template <class Eval>
GaussNewtonResult gauss_newton(Eval&& eval, Eigen::VectorXd c, const GaussNewtonOptions& opt) {
  GaussNewtonResult out;
  Eigen::VectorXd R;
  Eigen::MatrixXd J;
  eval(c, &R, nullptr);
  double rn = R.norm();
  if (!std::isfinite(rn)) throw ConvergenceError("reduced solve: residual is not finite", c, rn, 0);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(opt.rank_threshold);
  for (int it = 0;; ++it) {
    out.iterations = it;
    if (rn <= opt.residual_tolerance) break;
    if (it == opt.max_iterations)
      throw ConvergenceError("reduced solve: no convergence in " + std::to_string(it) + " Gauss-Newton iterations", c,
                             rn, it);
    eval(c, nullptr, &J);
    cod.compute(J);
    if (cod.rank() < J.cols()) out.degenerate = true;
    const Eigen::VectorXd delta = cod.solve(-R);
    if (!delta.allFinite()) throw ConvergenceError("reduced solve: step is not finite", c, rn, it);
    if (delta.norm() <= opt.step_tolerance * (1.0 + c.norm())) break;

    double alpha = 1.0;
    Eigen::VectorXd trial = c + delta, Rt;
    eval(trial, &Rt, nullptr);
    for (int k = 0; k < opt.max_halvings && !(Rt.allFinite() && Rt.norm() < rn); ++k) {
      alpha *= 0.5;
      trial = c + alpha * delta;
      eval(trial, &Rt, nullptr);
    }
    // no decrease along the Gauss-Newton direction: c is stationary
    if (!(Rt.allFinite() && Rt.norm() < rn)) break;
    c = std::move(trial);
    R = std::move(Rt);
    rn = R.norm();
  }
  out.c = std::move(c);
  out.residual = std::move(R);
  return out;
}

}  // namespace

Eigen::VectorXd ReducedModel::initial_guess(const Parameter& mu) const {
  const auto count = static_cast<Index>(parameters.size());
  if (count != n() || snapshot_transform.cols() != n()) return Eigen::VectorXd::Zero(n());
  const ParameterBox& box = problem_->box();
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < count; ++j) {
    const Parameter& p = parameters[static_cast<std::size_t>(j)];
    if (p.size() != mu.size()) return Eigen::VectorXd::Zero(n());
    double d = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
      const double w = box[k].width() > 0.0 ? box[k].width() : 1.0;
      d += std::pow((p[k] - mu[k]) / w, 2);
    }
    if (d < best_d) best_d = d, best = j;
  }
  return snapshot_transform.col(best);
}

Coefficients solve_reduced(const ReducedModel& model, const Parameter& mu, const Eigen::VectorXd* initial,
                           const GaussNewtonOptions& options) {
  model.problem().check_parameter(mu);
  Eigen::VectorXd c0;
  if (!initial) {
    c0 = model.initial_guess(mu);
  } else {
    if (initial->size() != model.n()) throw InvalidArgument("solve_reduced: initial guess has wrong length");
    c0 = *initial;
  }
  const auto eval = [&](const Eigen::VectorXd& c, Eigen::VectorXd* R, Eigen::MatrixXd* J) {
    model.evaluate(c, mu, nullptr, std::nullopt, R, J);
  };
  auto r = gauss_newton(eval, std::move(c0), options);
  Coefficients out;
  out.c = std::move(r.c);
  out.mu = mu;
  out.iterations = r.iterations;
  out.residual_norm = r.residual.norm();
  out.residual_max_norm = r.residual.lpNorm<Eigen::Infinity>();
  out.degenerate = r.degenerate;
  return out;
}

ReducedTrajectory solve_reduced_transient(const ReducedModel& model, const Parameter& mu,
                                          std::optional<Index> stop_index, const GaussNewtonOptions& options) {
  const Problem& p = model.problem();
  p.check_parameter(mu);
  const TimeGrid& tg = p.time_grid();
  const Index stop = stop_index.value_or(tg.steps);
  if (stop < 0 || stop > tg.steps) throw InvalidArgument("solve_reduced_transient: stop index out of range");
  ReducedTrajectory out;
  out.mu = mu;
  out.coefficients.setZero(model.n(), tg.steps + 1);
  out.iterations.assign(static_cast<std::size_t>(tg.steps + 1), 0);

  Eigen::VectorXd u0(model.M());
  for (Index r = 0; r < model.M(); ++r) u0[r] = p.initial_state()[model.points()[static_cast<std::size_t>(r)]];
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> fit;
  fit.setThreshold(options.rank_threshold);
  fit.compute(model.restricted_basis());
  out.coefficients.col(0) = fit.solve(u0);

  const double dt = tg.dt;
  for (Index k = 1; k <= stop; ++k) {
    const Eigen::VectorXd prev = out.coefficients.col(k - 1);
    const auto eval = [&](const Eigen::VectorXd& c, Eigen::VectorXd* R, Eigen::MatrixXd* J) {
      model.evaluate(c, mu, &prev, dt, R, J);
    };
    try {
      auto r = gauss_newton(eval, prev, options);
      out.coefficients.col(k) = r.c;
      out.iterations[static_cast<std::size_t>(k)] = r.iterations;
      out.degenerate = out.degenerate || r.degenerate;
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(std::string(e.what()) + " at time index " + std::to_string(k), e.last_iterate(),
                             e.residual_norm(), e.iterations(), k);
    }
    out.last_index = k;
  }
  return out;
}

double l1_indicator(const Eigen::VectorXd& c) { return c.lpNorm<1>(); }

double l1t_indicator(const Eigen::MatrixXd& coefficients, std::span<const Index> time_indices) {
  if (time_indices.empty()) throw InvalidArgument("l1t_indicator: empty set of time nodes");
  double best = 0.0;
  for (Index k : time_indices) {
    if (k < 0 || k >= coefficients.cols()) throw InvalidArgument("l1t_indicator: time index out of range");
    best = std::max(best, coefficients.col(k).lpNorm<1>());
  }
  return best;
}

void ReducedModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_matrix(dir / "basis.bin", basis_);
  json j;
  j["format"] = "l1roc-reduced-model";
  j["version"] = 1;
  j["problem"] = to_json(problem_->config());
  j["nodes"] = problem_->size();
  j["n"] = n();
  j["basis_file"] = "basis.bin";
  j["solution_points"] = points_.solution_points;
  j["residual_points"] = points_.residual_points;
  json params = json::array();
  for (const auto& mu : parameters) params.push_back(to_json(mu));
  j["parameters"] = params;
  j["time_indices"] = time_indices;
  if (snapshot_transform.size()) {
    write_matrix(dir / "snapshot_transform.bin", snapshot_transform);
    j["snapshot_transform_file"] = "snapshot_transform.bin";
  }
  write_text(dir / "model.json", j.dump(2) + "\n");
}

ReducedModel ReducedModel::load(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_text(dir / "model.json"));
  } catch (const json::parse_error& e) {
    throw FormatError((dir / "model.json").string() + ": " + e.what());
  }
  try {
    if (j.at("format") != "l1roc-reduced-model") throw FormatError("model.json: unexpected format tag");
    if (j.at("version").get<int>() != 1) throw FormatError("model.json: unsupported version");
    auto problem = make_problem(problem_config_from_json(j.at("problem")));
    Eigen::MatrixXd basis = read_matrix(dir / j.at("basis_file").get<std::string>());
    if (basis.rows() != j.at("nodes").get<Index>() || basis.cols() != j.at("n").get<Index>())
      throw FormatError("model.json: basis dimensions disagree with the metadata");
    if (basis.rows() != problem->size()) throw FormatError("model.json: basis does not match the problem grid");
    CollocationSet pts;
    pts.solution_points = j.at("solution_points").get<std::vector<Index>>();
    pts.residual_points = j.at("residual_points").get<std::vector<Index>>();
    ReducedModel model(std::move(problem), std::move(basis), std::move(pts));
    for (const auto& mu : j.at("parameters")) model.parameters.push_back(parameter_from_json(mu));
    model.time_indices = j.at("time_indices").get<std::vector<Index>>();
    if (j.contains("snapshot_transform_file")) {
      model.snapshot_transform = read_matrix(dir / j.at("snapshot_transform_file").get<std::string>());
      if (model.snapshot_transform.rows() != model.n() || model.snapshot_transform.cols() != model.n())
        throw FormatError("model.json: snapshot transform has wrong dimensions");
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model.json: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("model.json: ") + e.what());
  }
}

}  // namespace l1roc
