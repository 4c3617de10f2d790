#include "l1roc/offline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "l1roc/errors.hpp"
#include "l1roc/parallel.hpp"

namespace l1roc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Index of the largest finite value; ties and NaNs resolved towards the lowest index.
std::optional<std::size_t> argmax(const std::vector<double>& v, const std::vector<bool>& skip) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (skip[i] || std::isnan(v[i])) continue;
    if (!best || v[i] > v[*best]) best = i;
  }
  return best;
}

Eigen::VectorXd padded(const Eigen::VectorXd& c, Index n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  const Index m = std::min<Index>(c.size(), n);
  out.head(m) = c.head(m);
  return out;
}

// Grows the upper-triangular snapshot transform by the column (coefficients, scale).
void append_transform(Eigen::MatrixXd& S, const EimResult& e) {
  const Index n = S.rows();
  S.conservativeResize(n + 1, n + 1);
  S.row(n).setZero();
  S.col(n).head(n) = e.coefficients;
  S(n, n) = e.scale;
}

void append_column(Eigen::MatrixXd& m, const Eigen::VectorXd& v) {
  if (m.cols() == 0) m.resize(v.size(), 0);
  m.conservativeResize(Eigen::NoChange, m.cols() + 1);
  m.col(m.cols() - 1) = v;
}

// Residual-point EIM. If the residual is already represented by the residual
// basis (or vanishes), fall back to the allowed node where the new solution
// basis vector is largest, with a unit vector as its residual basis column.
EimResult residual_update(const Eigen::VectorXd& r, const Eigen::MatrixXd& residual_basis,
                          const std::vector<Index>& residual_points, std::vector<Index> excluded,
                          const Eigen::VectorXd& new_solution_vector) {
  if (auto e = eim_update(r, residual_basis, residual_points, excluded)) return *e;
  std::vector<bool> skip(static_cast<std::size_t>(r.size()), false);
  for (Index i : excluded) skip[static_cast<std::size_t>(i)] = true;
  Index pivot = -1;
  for (Index i = 0; i < r.size(); ++i) {
    if (skip[static_cast<std::size_t>(i)]) continue;
    if (pivot < 0 || std::abs(new_solution_vector[i]) > std::abs(new_solution_vector[pivot])) pivot = i;
  }
  if (pivot < 0) throw InvalidArgument("greedy: no node left for a residual collocation point");
  EimResult out;
  out.vector = Eigen::VectorXd::Zero(r.size());
  out.vector[pivot] = 1.0;
  out.pivot = pivot;
  return out;
}

void check_training_set(const Problem& p, const std::vector<Parameter>& train, const GreedyOptions& opt) {
  if (train.empty()) throw InvalidArgument("greedy: empty training set");
  if (opt.max_basis < 1) throw InvalidArgument("greedy: max_basis must be at least 1");
  for (const auto& mu : train) p.check_parameter(mu);
}

}  // namespace

std::optional<EimResult> eim_update(const Eigen::VectorXd& v, const Eigen::MatrixXd& basis,
                                    std::span<const Index> points, std::span<const Index> excluded,
                                    double relative_tolerance) {
  const Index m = static_cast<Index>(points.size());
  if (m > 0 && (basis.rows() != v.size() || basis.cols() != m))
    throw InvalidArgument("eim_update: basis and points are inconsistent");
  Eigen::VectorXd w = v;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
  if (m > 0) {
    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd rhs(m);
    for (Index i = 0; i < m; ++i) {
      const Index node = points[static_cast<std::size_t>(i)];
      if (node < 0 || node >= v.size()) throw InvalidArgument("eim_update: point out of range");
      B.row(i) = basis.row(node);
      rhs[i] = v[node];
    }
    alpha = B.triangularView<Eigen::UnitLower>().solve(rhs);
    w -= basis * alpha;
    for (Index node : points) w[node] = 0.0;
  }
  std::vector<bool> skip(static_cast<std::size_t>(v.size()), false);
  for (Index i : excluded) {
    if (i < 0 || i >= v.size()) throw InvalidArgument("eim_update: excluded node out of range");
    skip[static_cast<std::size_t>(i)] = true;
  }
  Index pivot = -1;
  double best = -1.0;
  for (Index i = 0; i < w.size(); ++i) {
    if (skip[static_cast<std::size_t>(i)]) continue;
    const double a = std::abs(w[i]);
    if (a > best) {
      best = a;
      pivot = i;
    }
  }
  const double scale = v.lpNorm<Eigen::Infinity>();
  if (pivot < 0 || !(scale > 0.0) || !(best >= relative_tolerance * scale) || best == 0.0) return std::nullopt;
  EimResult out;
  out.vector = w / w[pivot];
  out.vector[pivot] = 1.0;
  out.pivot = pivot;
  out.coefficients = std::move(alpha);
  out.scale = w[pivot];
  return out;
}

std::string_view to_string(Indicator indicator) { return indicator == Indicator::l1 ? "l1" : "residual"; }

std::string_view to_string(L1Coordinates c) { return c == L1Coordinates::snapshot ? "snapshot" : "basis"; }

L1Coordinates parse_l1_coordinates(std::string_view name) {
  if (name == "snapshot") return L1Coordinates::snapshot;
  if (name == "basis") return L1Coordinates::basis;
  throw InvalidArgument("unknown L1 coordinates '" + std::string(name) + "' (expected snapshot or basis)");
}

Indicator parse_indicator(std::string_view name) {
  if (name == "l1") return Indicator::l1;
  if (name == "residual") return Indicator::residual;
  throw InvalidArgument("unknown indicator '" + std::string(name) + "' (expected l1 or residual)");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

GreedyResult greedy_steady(std::shared_ptr<const Problem> problem, const std::vector<Parameter>& train,
                           const GreedyOptions& opt) {
  TruthSolver solver;
  return greedy_steady(std::move(problem), train, opt, solver);
}

GreedyResult greedy_steady(std::shared_ptr<const Problem> problem, const std::vector<Parameter>& train,
                           const GreedyOptions& opt, const TruthSolver& solver) {
  if (!problem) throw InvalidArgument("greedy: null problem");
  const Problem& p = *problem;
  check_training_set(p, train, opt);
  if (static_cast<std::size_t>(opt.max_basis) > train.size())
    throw InvalidArgument("greedy: max_basis exceeds the training set size");
  const bool fixed = !opt.fixed_sequence.empty();
  if (fixed) {
    std::set<std::size_t> seen;
    for (std::size_t i : opt.fixed_sequence)
      if (i >= train.size() || !seen.insert(i).second)
        throw InvalidArgument("greedy: fixed sequence must hold distinct training indices");
  }

  const auto t_start = Clock::now();
  std::mt19937_64 rng(derive_seed(opt.seed, 1));
  const std::size_t first =
      fixed ? opt.fixed_sequence.front() : std::uniform_int_distribution<std::size_t>(0, train.size() - 1)(rng);

  Eigen::MatrixXd W, R, S;
  std::vector<Index> Xs, Xr;
  std::vector<bool> selected(train.size(), false);
  std::vector<Eigen::VectorXd> warm(train.size());
  GreedyHistory history;
  history.indicator = opt.indicator;
  std::vector<Eigen::VectorXd> snapshots;

  // truth solve + snapshot EIM; returns the new basis vector or nullopt if degenerate
  auto enrich = [&](std::size_t idx, GreedyStep& step) -> std::optional<EimResult> {
    const auto t0 = Clock::now();
    const auto calls0 = solver.invocations();
    Snapshot s = solver.solve_steady(p, train[idx]);
    step.truth_seconds = seconds_since(t0);
    step.truth_invocations = solver.invocations() - calls0;
    std::vector<Index> excluded(Xs);
    excluded.insert(excluded.end(), Xr.begin(), Xr.end());
    auto e = eim_update(s.u, W, Xs, excluded);
    if (e) snapshots.push_back(std::move(s.u));
    return e;
  };

  {
    GreedyStep step;
    step.parameter_index = first;
    step.mu = train[first];
    auto e = enrich(first, step);
    if (!e) throw InvalidArgument("greedy: first snapshot is identically zero");
    append_column(W, e->vector);
    append_transform(S, *e);
    Xs.push_back(e->pivot);
    selected[first] = true;
    step.n = 1;
    step.solution_point = e->pivot;
    step.cumulative_seconds = seconds_since(t_start);
    history.steps.push_back(std::move(step));
  }

  while (W.cols() < opt.max_basis) {
    const Index n = W.cols();
    GreedyStep step;
    const auto t_sweep = Clock::now();
    const ReducedModel model(problem, W, CollocationSet{Xs, Xr});
    const auto coordinates = [&](const Eigen::VectorXd& c) -> Eigen::VectorXd {
      if (opt.l1_coordinates == L1Coordinates::basis) return c;
      return S.triangularView<Eigen::Upper>().solve(c);
    };
    std::size_t idx = 0;
    Eigen::VectorXd c_sel;

    auto reduced = [&](std::size_t i, std::atomic<std::size_t>& failures) {
      const Eigen::VectorXd init = warm[i].size() ? padded(warm[i], n) : Eigen::VectorXd::Zero(n);
      try {
        return solve_reduced(model, train[i], &init, opt.reduced).c;
      } catch (const ConvergenceError& e) {
        ++failures;
        return Eigen::VectorXd(e.last_iterate());
      }
    };

    std::atomic<std::size_t> failures{0};
    if (fixed) {
      if (static_cast<std::size_t>(n) >= opt.fixed_sequence.size()) break;
      idx = opt.fixed_sequence[static_cast<std::size_t>(n)];
      c_sel = reduced(idx, failures);
    } else {
      std::vector<double> values(train.size(), std::numeric_limits<double>::quiet_NaN());
      parallel_for(train.size(), opt.threads, [&](std::size_t i) {
        if (selected[i]) return;
        Eigen::VectorXd c = reduced(i, failures);
        values[i] = opt.indicator == Indicator::l1 ? l1_indicator(coordinates(c))
                                                   : p.residual_full(model.reconstruct(c), train[i]).norm();
        warm[i] = std::move(c);
      });
      const auto best = argmax(values, selected);
      if (!best) {
        history.stopped_early = true;
        history.stop_reason = "no admissible training parameter left";
        break;
      }
      idx = *best;
      c_sel = warm[idx];
      step.indicator = values[idx];
      step.indicators = std::move(values);
    }
    step.sweep_failures = failures.load();
    step.sweep_seconds = seconds_since(t_sweep);
    step.parameter_index = idx;
    step.mu = train[idx];

    auto e = enrich(idx, step);
    if (!e) {
      history.stopped_early = true;
      history.stop_reason = "snapshot at " + train[idx].to_string() + " is already represented by the basis";
      break;
    }
    const Eigen::VectorXd r = p.residual_full(model.reconstruct(c_sel), train[idx]);
    std::vector<Index> excluded(Xs);
    excluded.insert(excluded.end(), Xr.begin(), Xr.end());
    excluded.push_back(e->pivot);
    const EimResult rr = residual_update(r, R, Xr, excluded, e->vector);

    append_column(W, e->vector);
    append_transform(S, *e);
    Xs.push_back(e->pivot);
    append_column(R, rr.vector);
    Xr.push_back(rr.pivot);
    selected[idx] = true;
    step.n = W.cols();
    step.solution_point = e->pivot;
    step.residual_point = rr.pivot;
    step.cumulative_seconds = seconds_since(t_start);
    history.steps.push_back(std::move(step));
  }

  history.offline_seconds = seconds_since(t_start);
  ReducedModel model(problem, W, CollocationSet{Xs, Xr});
  for (const auto& s : history.steps) model.parameters.push_back(s.mu);
  model.snapshot_transform = S;
  return GreedyResult{std::move(model), std::move(history), std::move(snapshots), std::move(R)};
}

std::optional<Index> select_time_node(const Eigen::MatrixXd& residuals, Index last_index,
                                     std::span<const Index> taken) {
  if (last_index >= residuals.cols()) throw InvalidArgument("select_time_node: last index out of range");
  std::optional<Index> sel;
  double best = -1.0;
  for (Index k = 1; k <= last_index; ++k) {
    if (std::find(taken.begin(), taken.end(), k) != taken.end()) continue;
    const double eps = residuals.col(k).lpNorm<Eigen::Infinity>();
    if (eps > best) {
      best = eps;
      sel = k;
    }
  }
  return sel;
}

Eigen::MatrixXd full_residual_transient(const ReducedModel& model, const ReducedTrajectory& t) {
  const Problem& p = model.problem();
  if (t.coefficients.rows() != model.n()) throw InvalidArgument("full_residual_transient: coefficient size mismatch");
  const double dt = p.time_grid().dt;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p.size(), t.last_index + 1);
  Eigen::VectorXd prev = model.reconstruct(t.coefficients.col(0));
  for (Index k = 1; k <= t.last_index; ++k) {
    Eigen::VectorXd u = model.reconstruct(t.coefficients.col(k));
    out.col(k) = p.residual_full(u, t.mu, prev, dt);
    prev = std::move(u);
  }
  return out;
}

Index largest_variation_index(const Trajectory& t) {
  Index best = 0;
  double spread = -1.0;
  for (Index k = 0; k <= t.last_index; ++k) {
    const auto col = t.states.col(k);
    const double s = col.size() ? col.maxCoeff() - col.minCoeff() : 0.0;
    if (s > spread) {
      spread = s;
      best = k;
    }
  }
  return best;
}

GreedyResult greedy_transient(std::shared_ptr<const Problem> problem, const std::vector<Parameter>& train,
                              const GreedyOptions& opt) {
  TruthSolver solver;
  return greedy_transient(std::move(problem), train, opt, solver);
}

GreedyResult greedy_transient(std::shared_ptr<const Problem> problem, const std::vector<Parameter>& train,
                              const GreedyOptions& opt, const TruthSolver& solver) {
  if (!problem) throw InvalidArgument("greedy: null problem");
  const Problem& p = *problem;
  if (!p.is_transient()) throw InvalidArgument("greedy_transient: " + std::string(p.id()) + " is not time dependent");
  check_training_set(p, train, opt);
  if (!opt.fixed_sequence.empty()) throw InvalidArgument("greedy_transient: fixed sequences are not supported");

  const auto t_start = Clock::now();
  std::mt19937_64 rng(derive_seed(opt.seed, 1));
  const std::size_t first = std::uniform_int_distribution<std::size_t>(0, train.size() - 1)(rng);

  Eigen::MatrixXd W, R, S;
  std::vector<Index> Xs, Xr;
  std::set<Index> reduced_nodes;
  std::map<std::size_t, Trajectory> cache;
  std::map<std::size_t, std::set<Index>> chosen_times;
  GreedyHistory history;
  history.indicator = opt.indicator;
  std::vector<Eigen::VectorXd> snapshots;
  std::vector<Index> time_indices;

  // truth trajectory of training parameter idx up to time index k (cached and extended)
  auto truth_state = [&](std::size_t idx, std::optional<Index> k, GreedyStep& step) -> const Trajectory& {
    const auto t0 = Clock::now();
    const auto calls0 = solver.invocations();
    auto it = cache.find(idx);
    if (it == cache.end()) {
      it = cache.emplace(idx, solver.solve_transient(p, train[idx], k)).first;
    } else {
      solver.extend(p, it->second, k.value_or(p.time_grid().steps));
    }
    step.truth_seconds += seconds_since(t0);
    step.truth_invocations += solver.invocations() - calls0;
    return it->second;
  };

  {
    GreedyStep step;
    step.parameter_index = first;
    step.mu = train[first];
    const Trajectory& traj = truth_state(first, std::nullopt, step);
    const Index t1 = largest_variation_index(traj);
    auto e = eim_update(traj.states.col(t1), W, Xs, {});
    if (!e) throw InvalidArgument("greedy: first snapshot is identically zero");
    snapshots.push_back(traj.states.col(t1));
    append_column(W, e->vector);
    append_transform(S, *e);
    Xs.push_back(e->pivot);
    reduced_nodes.insert(t1);
    chosen_times[first].insert(t1);
    time_indices.push_back(t1);
    step.n = 1;
    step.time_index = t1;
    step.solution_point = e->pivot;
    step.cumulative_seconds = seconds_since(t_start);
    history.steps.push_back(std::move(step));
  }

  while (W.cols() < opt.max_basis) {
    GreedyStep step;
    const auto t_sweep = Clock::now();
    const ReducedModel model(problem, W, CollocationSet{Xs, Xr});
    const auto coordinates = [&](const Eigen::VectorXd& c) -> Eigen::VectorXd {
      if (opt.l1_coordinates == L1Coordinates::basis) return c;
      return S.triangularView<Eigen::Upper>().solve(c);
    };
    const std::vector<Index> nodes(reduced_nodes.begin(), reduced_nodes.end());
    const Index horizon = nodes.back();

    std::atomic<std::size_t> failures{0};
    std::vector<double> values(train.size(), std::numeric_limits<double>::quiet_NaN());
    parallel_for(train.size(), opt.threads, [&](std::size_t i) {
      try {
        const ReducedTrajectory rt = solve_reduced_transient(model, train[i], horizon, opt.reduced);
        if (opt.indicator == Indicator::l1) {
          Eigen::MatrixXd cs(rt.coefficients.rows(), rt.coefficients.cols());
          for (Index k : nodes) cs.col(k) = coordinates(rt.coefficients.col(k));
          values[i] = l1t_indicator(cs, nodes);
        } else {
          const Eigen::MatrixXd res = full_residual_transient(model, rt);
          double v = 0.0;
          for (Index k : nodes) v = std::max(v, res.col(k).norm());
          values[i] = v;
        }
      } catch (const ConvergenceError&) {
        ++failures;  // a reduced trajectory that breaks down is as bad as it gets
        values[i] = std::numeric_limits<double>::infinity();
      }
    });
    const auto best = argmax(values, std::vector<bool>(train.size(), false));
    if (!best) {
      history.stopped_early = true;
      history.stop_reason = "indicator sweep produced no finite values";
      break;
    }
    const std::size_t idx = *best;
    step.parameter_index = idx;
    step.mu = train[idx];
    step.indicator = values[idx];
    step.indicators = std::move(values);
    step.sweep_failures = failures.load();

    // residual over the whole time grid for the chosen parameter
    ReducedTrajectory rt;
    std::optional<Index> broke_at;
    try {
      rt = solve_reduced_transient(model, train[idx], std::nullopt, opt.reduced);
    } catch (const ConvergenceError& e) {
      broke_at = e.time_index();
      rt = solve_reduced_transient(model, train[idx], *broke_at - 1, opt.reduced);
    }
    const Eigen::MatrixXd res = full_residual_transient(model, rt);
    const auto& taken = chosen_times[idx];
    std::optional<Index> t_sel;
    if (broke_at && !taken.contains(*broke_at)) {
      t_sel = *broke_at;
    } else {
      const std::vector<Index> skip(taken.begin(), taken.end());
      t_sel = select_time_node(res, rt.last_index, skip);
    }
    if (!t_sel) {
      history.stopped_early = true;
      history.stop_reason = "every time node of " + train[idx].to_string() + " is already selected";
      break;
    }
    step.sweep_seconds = seconds_since(t_sweep);

    const Trajectory& traj = truth_state(idx, *t_sel, step);
    const Eigen::VectorXd u = traj.states.col(*t_sel);
    std::vector<Index> excluded(Xs);
    excluded.insert(excluded.end(), Xr.begin(), Xr.end());
    auto e = eim_update(u, W, Xs, excluded);
    if (!e) {
      history.stopped_early = true;
      history.stop_reason = "snapshot at " + train[idx].to_string() + ", t index " + std::to_string(*t_sel) +
                            " is already represented by the basis";
      break;
    }
    const Eigen::VectorXd r = *t_sel <= rt.last_index ? Eigen::VectorXd(res.col(*t_sel))
                                                      : Eigen::VectorXd::Zero(p.size());
    excluded.push_back(e->pivot);
    const EimResult rr = residual_update(r, R, Xr, excluded, e->vector);

    snapshots.push_back(u);
    append_column(W, e->vector);
    append_transform(S, *e);
    Xs.push_back(e->pivot);
    append_column(R, rr.vector);
    Xr.push_back(rr.pivot);
    reduced_nodes.insert(*t_sel);
    chosen_times[idx].insert(*t_sel);
    time_indices.push_back(*t_sel);
    step.n = W.cols();
    step.time_index = *t_sel;
    step.multiplicity = static_cast<int>(chosen_times[idx].size());
    step.solution_point = e->pivot;
    step.residual_point = rr.pivot;
    step.cumulative_seconds = seconds_since(t_start);
    history.steps.push_back(std::move(step));
  }

  history.offline_seconds = seconds_since(t_start);
  history.reduced_time_nodes.assign(reduced_nodes.begin(), reduced_nodes.end());
  ReducedModel model(problem, W, CollocationSet{Xs, Xr});
  for (const auto& s : history.steps) model.parameters.push_back(s.mu);
  model.snapshot_transform = S;
  model.time_indices = std::move(time_indices);
  return GreedyResult{std::move(model), std::move(history), std::move(snapshots), std::move(R)};
}

}  // namespace l1roc
