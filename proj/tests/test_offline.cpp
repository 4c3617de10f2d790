#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "doctest.h"
#include "l1roc/errors.hpp"
#include "l1roc/offline.hpp"

using namespace l1roc;

namespace {

Eigen::MatrixXd random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

// Gaussian elimination with row partial pivoting on a tall matrix. Returns
// the pivot rows and the unit lower-trapezoidal factor in original row order.
std::pair<std::vector<Index>, Eigen::MatrixXd> lu_partial_pivoting(Eigen::MatrixXd A) {
  const Index m = A.rows(), n = A.cols();
  std::vector<Index> perm(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, n);
  std::vector<Index> pivots;
  for (Index k = 0; k < n; ++k) {
    Index p = k;
    for (Index i = k; i < m; ++i)
      if (std::abs(A(i, k)) > std::abs(A(p, k))) p = i;
    A.row(k).swap(A.row(p));
    L.row(k).swap(L.row(p));
    std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(p)]);
    pivots.push_back(perm[static_cast<std::size_t>(k)]);
    for (Index i = k; i < m; ++i) L(i, k) = A(i, k) / A(k, k);
    for (Index i = k + 1; i < m; ++i) A.row(i) -= L(i, k) * A.row(k);
  }
  Eigen::MatrixXd out(m, n);
  for (Index i = 0; i < m; ++i) out.row(perm[static_cast<std::size_t>(i)]) = L.row(i);
  return {pivots, out};
}

void check_structure(const ReducedModel& m) {
  const auto& xs = m.collocation().solution_points;
  const auto n = static_cast<Index>(xs.size());
  REQUIRE(n == m.n());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double v = m.basis()(xs[static_cast<std::size_t>(i)], j);
      if (i == j) CHECK(std::abs(v - 1.0) <= 1e-12);
      else if (i < j) CHECK(std::abs(v) <= 1e-12);
    }
  CHECK(m.M() == (n == 1 ? 1 : 2 * n - 1));
  CHECK_NOTHROW(m.collocation().validate(m.problem().size(), static_cast<std::size_t>(n)));
}

Parameter center(const ParameterBox& box) {
  std::vector<double> v;
  for (const auto& b : box.bounds()) v.push_back(0.5 * (b.lo + b.hi));
  return Parameter(v);
}

std::vector<Parameter> box_mesh(const ParameterBox& box, int per_axis) {
  std::vector<std::vector<double>> axes;
  for (const auto& b : box.bounds()) {
    std::vector<double> a;
    for (int i = 0; i < per_axis; ++i) a.push_back(b.lo + (b.hi - b.lo) * (i + 0.5) / per_axis);
    axes.push_back(a);
  }
  return tensor_mesh(axes);
}

std::shared_ptr<const Problem> short_transient(ProblemKind kind, Index K) {
  ProblemConfig c{.kind = kind, .K = K};
  c.final_time = 0.2;
  c.time_step = 0.01;
  return make_problem(c);
}

}  // namespace

TEST_CASE("eim update on an empty basis normalizes at the largest entry") {
  const Eigen::VectorXd v = (Eigen::VectorXd(5) << 0.5, -3.0, 1.0, 2.9, 0.0).finished();
  const auto e = eim_update(v, Eigen::MatrixXd(5, 0), {}, {});
  REQUIRE(e);
  CHECK(e->pivot == 1);
  CHECK((e->vector - v / -3.0).norm() == 0.0);
  CHECK(e->scale == -3.0);
}

TEST_CASE("eim update ties go to the lowest index and exclusions are honoured") {
  const Eigen::VectorXd v = (Eigen::VectorXd(4) << 1.0, -2.0, 2.0, 0.5).finished();
  CHECK(eim_update(v, Eigen::MatrixXd(4, 0), {}, {})->pivot == 1);
  const std::vector<Index> ex{1};
  CHECK(eim_update(v, Eigen::MatrixXd(4, 0), {}, ex)->pivot == 2);
}

TEST_CASE("eim update flags a vector already in the span") {
  const Eigen::VectorXd v = random_matrix(10, 1, 1).col(0);
  const auto e1 = eim_update(v, Eigen::MatrixXd(10, 0), {}, {});
  REQUIRE(e1);
  Eigen::MatrixXd W = e1->vector;
  const std::vector<Index> pts{e1->pivot};
  CHECK_FALSE(eim_update(2.0 * e1->vector, W, pts, pts));
}

TEST_CASE("sequential eim updates match lu with partial pivoting") {
  const Eigen::MatrixXd V = random_matrix(30, 3, 42);
  Eigen::MatrixXd W(30, 0);
  std::vector<Index> pts;
  for (Index k = 0; k < 3; ++k) {
    const auto e = eim_update(V.col(k), W, pts, pts);
    REQUIRE(e);
    // v = W alpha + s xi
    CHECK((W * e->coefficients + e->scale * e->vector - V.col(k)).norm() < 1e-12 * V.col(k).norm());
    W.conservativeResize(Eigen::NoChange, k + 1);
    W.col(k) = e->vector;
    pts.push_back(e->pivot);
  }
  const auto [pivots, L] = lu_partial_pivoting(V);
  CHECK(pts == pivots);
  CHECK((W - L).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("seed derivation is deterministic and separates streams") {
  CHECK(derive_seed(0, 1) == derive_seed(0, 1));
  CHECK(derive_seed(0, 1) != derive_seed(0, 2));
  CHECK(derive_seed(1, 1) != derive_seed(0, 1));
}

TEST_CASE("indicator names round trip") {
  CHECK(parse_indicator("l1") == Indicator::l1);
  CHECK(parse_indicator("residual") == Indicator::residual);
  CHECK(to_string(Indicator::residual) == "residual");
  CHECK_THROWS_AS(parse_indicator("l2"), InvalidArgument);
  CHECK(parse_l1_coordinates(to_string(L1Coordinates::basis)) == L1Coordinates::basis);
}

TEST_CASE("a single training parameter gives the snapshot as basis") {
  const auto p = make_problem({.kind = ProblemKind::steady_burgers, .K = 30});
  GreedyOptions o;
  o.max_basis = 1;
  const std::vector<Parameter> train{Parameter{0.2}};
  const auto res = greedy_steady(p, train, o);
  const Eigen::VectorXd u = TruthSolver().solve_steady(*p, train[0]).u;
  Index piv = 0;
  u.cwiseAbs().maxCoeff(&piv);
  CHECK(res.model.n() == 1);
  CHECK(res.model.collocation().solution_points == std::vector<Index>{piv});
  CHECK(res.model.collocation().residual_points.empty());
  CHECK((res.model.basis().col(0) - u / u[piv]).norm() < 1e-14);
}

TEST_CASE("greedy rejects bad training sets") {
  const auto p = make_problem({.kind = ProblemKind::steady_burgers, .K = 30});
  GreedyOptions o;
  o.max_basis = 3;
  CHECK_THROWS_AS(greedy_steady(p, {}, o), InvalidArgument);
  CHECK_THROWS_AS(greedy_steady(p, {Parameter{0.2}, Parameter{0.3}}, o), InvalidArgument);
  CHECK_THROWS_AS(greedy_steady(p, {Parameter{0.2}, Parameter{0.3}, Parameter{7.0}}, o), DomainError);
}

TEST_CASE("steady greedy history invariants") {
  const auto p = make_problem({.kind = ProblemKind::steady_burgers, .K = 80});
  const auto train = parse_mesh({"log:0.05:1:30"});
  for (auto ind : {Indicator::l1, Indicator::residual}) {
    CAPTURE(to_string(ind));
    GreedyOptions o;
    o.max_basis = 6;
    o.indicator = ind;
    o.seed = 7;
    TruthSolver solver;
    const auto res = greedy_steady(p, train, o, solver);
    const auto& h = res.history;
    REQUIRE(h.steps.size() == 6);
    check_structure(res.model);
    CHECK(solver.invocations() == 6);

    std::set<std::size_t> seen;
    for (const auto& s : h.steps) {
      CHECK(seen.insert(s.parameter_index).second);
      CHECK(s.truth_invocations == 1);
      CHECK(s.mu == train[s.parameter_index]);
    }
    for (std::size_t k = 1; k < h.steps.size(); ++k) {
      const auto& s = h.steps[k];
      double best = -1.0;
      std::size_t arg = 0;
      std::set<std::size_t> before;
      for (std::size_t j = 0; j < k; ++j) before.insert(h.steps[j].parameter_index);
      for (std::size_t i = 0; i < s.indicators.size(); ++i) {
        if (before.count(i)) continue;
        if (s.indicators[i] > best) best = s.indicators[i], arg = i;
      }
      CHECK(s.indicator == best);
      CHECK(s.parameter_index == arg);
      for (std::size_t j = 0; j < k; ++j) CHECK(std::isnan(s.indicators[h.steps[j].parameter_index]));
    }

    // a trained parameter is reproduced by its own snapshot: indicator 1
    for (const auto& st : h.steps) {
      const auto c = solve_reduced(res.model, st.mu);
      CHECK(l1_indicator(res.model.snapshot_coefficients(c.c)) == doctest::Approx(1.0).epsilon(1e-8));
    }

    const auto again = greedy_steady(p, train, o);
    for (std::size_t k = 0; k < h.steps.size(); ++k)
      CHECK(again.history.steps[k].parameter_index == h.steps[k].parameter_index);
  }
}

TEST_CASE("first parameter comes from the seeded generator") {
  const auto p = make_problem({.kind = ProblemKind::steady_burgers, .K = 30});
  const auto train = parse_mesh({"log:0.05:1:30"});
  GreedyOptions o;
  o.max_basis = 1;
  std::set<std::size_t> firsts;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    o.seed = seed;
    const auto a = greedy_steady(p, train, o).history.steps[0].parameter_index;
    std::mt19937_64 rng(derive_seed(seed, 1));
    CHECK(a == std::uniform_int_distribution<std::size_t>(0, train.size() - 1)(rng));
    firsts.insert(a);
  }
  CHECK(firsts.size() > 1);
}

TEST_CASE("fixed sequence bypasses the sweep") {
  const auto p = make_problem({.kind = ProblemKind::steady_burgers, .K = 30});
  const auto train = parse_mesh({"log:0.05:1:10"});
  GreedyOptions o;
  o.max_basis = 3;
  o.fixed_sequence = {4, 0, 9};
  const auto res = greedy_steady(p, train, o);
  REQUIRE(res.history.steps.size() == 3);
  CHECK(res.history.steps[0].parameter_index == 4);
  CHECK(res.history.steps[1].parameter_index == 0);
  CHECK(res.history.steps[2].parameter_index == 9);
  check_structure(res.model);
}

TEST_CASE("eim structure for every steady problem") {
  for (auto kind : all_problem_kinds()) {
    if (is_transient(kind)) continue;
    CAPTURE(to_string(kind));
    const auto p = make_problem({.kind = kind, .K = kind == ProblemKind::steady_burgers ? 60 : 16});
    GreedyOptions o;
    o.max_basis = 4;
    const auto res = greedy_steady(p, box_mesh(p->box(), p->box().dimension() == 1 ? 12 : 4), o);
    CHECK(res.model.n() == 4);
    check_structure(res.model);
  }
}

TEST_CASE("largest variation index matches a brute force scan") {
  const auto p = short_transient(ProblemKind::transient_cubic_rd, 12);
  const Trajectory tr = TruthSolver().solve_transient(*p, center(p->box()));
  Index best = 0;
  double spread = -1.0;
  for (Index k = 0; k < tr.states.cols(); ++k) {
    const double s = tr.states.col(k).maxCoeff() - tr.states.col(k).minCoeff();
    if (s > spread) spread = s, best = k;
  }
  CHECK(largest_variation_index(tr) == best);
}

TEST_CASE("time node selection skips taken nodes and breaks ties early") {
  Eigen::MatrixXd r = Eigen::MatrixXd::Ones(3, 6);
  CHECK(select_time_node(r, 5, std::vector<Index>{}) == 1);
  CHECK(select_time_node(r, 5, std::vector<Index>{1, 2}) == 3);
  r(1, 4) = -5.0;
  CHECK(select_time_node(r, 5, std::vector<Index>{}) == 4);
  CHECK(select_time_node(r, 3, std::vector<Index>{}) == 1);
  CHECK_FALSE(select_time_node(r, 2, std::vector<Index>{1, 2}));
}

TEST_CASE("full transient residual matches a direct recomputation") {
  const auto p = short_transient(ProblemKind::transient_burgers, 30);
  const auto W = random_matrix(p->size(), 3, 9);
  const ReducedModel m(p, W, CollocationSet{{2, 11, 20}, {5, 14}});
  ReducedTrajectory rt;
  rt.mu = center(p->box());
  rt.coefficients = 0.1 * random_matrix(3, p->time_grid().steps + 1, 10);
  rt.last_index = p->time_grid().steps;
  const Eigen::MatrixXd res = full_residual_transient(m, rt);
  CHECK(res.col(0).norm() == 0.0);
  const double dt = p->time_grid().dt;
  for (Index k = 1; k <= rt.last_index; ++k) {
    const Eigen::VectorXd direct = p->residual_full(W * rt.coefficients.col(k), rt.mu, W * rt.coefficients.col(k - 1), dt);
    CHECK((res.col(k) - direct).lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, direct.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("full transient residual vanishes for zero data and for a contained trajectory") {
  {
    ProblemConfig c{.kind = ProblemKind::transient_cubic_rd, .K = 10};
    c.final_time = 0.1;
    c.time_step = 0.01;
    c.forcing_constant = 0.0;
    const auto p = make_problem(c);
    const ReducedModel m(p, random_matrix(p->size(), 2, 4), CollocationSet{{0, 7}, {3}});
    ReducedTrajectory rt;
    rt.mu = center(p->box());
    rt.coefficients = Eigen::MatrixXd::Zero(2, 11);
    rt.last_index = 10;
    CHECK(full_residual_transient(m, rt).norm() == 0.0);
  }
  const auto p = short_transient(ProblemKind::transient_cubic_rd, 12);
  const Parameter mu = center(p->box());
  const Trajectory tr = TruthSolver().solve_transient(*p, mu);
  // basis = every state of the trajectory, coefficients = unit vectors
  const Index steps = p->time_grid().steps;
  Eigen::MatrixXd W = tr.states.rightCols(steps);
  std::vector<Index> xs;
  for (Index k = 0; k < steps; ++k) xs.push_back(k);
  std::vector<Index> xr;
  for (Index k = 0; k + 1 < steps; ++k) xr.push_back(steps + k);
  const ReducedModel m(p, W, CollocationSet{xs, xr});
  ReducedTrajectory rt;
  rt.mu = mu;
  rt.coefficients = Eigen::MatrixXd::Zero(steps, steps + 1);
  rt.coefficients.rightCols(steps).setIdentity();
  rt.last_index = steps;
  const Eigen::MatrixXd res = full_residual_transient(m, rt);
  for (Index k = 1; k <= steps; ++k) CHECK(res.col(k).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("transient greedy structure and time nodes") {
  const auto p = short_transient(ProblemKind::transient_cubic_rd, 12);
  const auto train = box_mesh(p->box(), 3);
  GreedyOptions o;
  o.max_basis = 6;
  TruthSolver solver;
  const auto res = greedy_transient(p, train, o, solver);
  const auto& h = res.history;
  REQUIRE(!h.steps.empty());
  check_structure(res.model);

  // first node: largest spread of the first parameter's trajectory
  const Trajectory tr = TruthSolver().solve_transient(*p, h.steps[0].mu);
  CHECK(h.steps[0].time_index == largest_variation_index(tr));

  std::set<std::pair<std::size_t, Index>> pairs;
  std::set<Index> nodes;
  for (const auto& s : h.steps) {
    REQUIRE(s.time_index);
    CHECK(*s.time_index >= 0);
    CHECK(pairs.insert({s.parameter_index, *s.time_index}).second);
    nodes.insert(*s.time_index);
  }
  CHECK(std::vector<Index>(nodes.begin(), nodes.end()) == h.reduced_time_nodes);
  CHECK(res.model.time_indices.size() == static_cast<std::size_t>(res.model.n()));
  // every basis vector comes from the stored trajectory of its parameter
  for (std::size_t j = 0; j < res.snapshots.size(); ++j) {
    const Trajectory t = TruthSolver().solve_transient(*p, h.steps[j].mu);
    CHECK((t.states.col(*h.steps[j].time_index) - res.snapshots[j]).norm() <= 1e-12 * res.snapshots[j].norm());
  }
}
