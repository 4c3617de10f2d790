#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "l1roc/errors.hpp"
#include "l1roc/offline.hpp"

using namespace l1roc;

namespace {

// -mu_2 * Lap(u) = f on the cubic grid; mu_1 is ignored.
struct LinearDiffusion : Problem {
  explicit LinearDiffusion(Index K)
      : Problem(resolved({.kind = ProblemKind::cubic_rd, .K = K}),
                DifferenceOperators::build(Grid::make(2, K, Interval{-1.0, 1.0})), {Channel::laplacian}) {
    const Eigen::MatrixXd x = grid().coordinates();
    Eigen::VectorXd f(x.rows());
    for (Index i = 0; i < x.rows(); ++i) f[i] = 1.0 + x(i, 0) * x(i, 1);
    set_forcing(f);
  }
  double boundary_value(Index, const Parameter&) const override { return 0.0; }
  void evaluate(const Eigen::MatrixXd& ch, const Parameter& mu, Eigen::VectorXd& F,
                Eigen::MatrixXd* dF) const override {
    F = -mu[1] * ch.col(0);
    if (dF) *dF = Eigen::MatrixXd::Constant(ch.rows(), 1, -mu[1]);
  }
  bool symmetric_jacobian() const override { return true; }
};

Eigen::MatrixXd columns(const std::vector<Eigen::VectorXd>& v) {
  Eigen::MatrixXd m(v.front().size(), static_cast<Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) m.col(static_cast<Index>(j)) = v[j];
  return m;
}

Parameter center(const ParameterBox& box) {
  std::vector<double> v;
  for (const auto& b : box.bounds()) v.push_back(0.5 * (b.lo + b.hi));
  return Parameter(v);
}

ReducedModel random_model(std::shared_ptr<const Problem> p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const Index n = 3;
  Eigen::MatrixXd W(p->size(), n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < p->size(); ++i) W(i, j) = g(rng);
  return ReducedModel(std::move(p), W, CollocationSet{{1, 5, 9}, {3, 7}});
}

GreedyResult small_burgers(Index N = 4) {
  const auto p = make_problem({.kind = ProblemKind::steady_burgers, .K = 60});
  GreedyOptions o;
  o.max_basis = N;
  return greedy_steady(p, parse_mesh({"log:0.05:1:20"}), o);
}

}  // namespace

TEST_CASE("l1 indicator examples") {
  CHECK(l1_indicator(Eigen::Vector3d(1.0, -2.0, 0.5)) == doctest::Approx(3.5));
  CHECK(l1_indicator(Eigen::VectorXd::Zero(4)) == 0.0);
  CHECK(l1_indicator(Eigen::VectorXd::Unit(5, 2)) == 1.0);
}

TEST_CASE("l1t indicator is the max over the listed time nodes") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd C(3, 12);
  for (Index j = 0; j < C.cols(); ++j)
    for (Index i = 0; i < 3; ++i) C(i, j) = g(rng);
  const std::vector<Index> one{4};
  CHECK(l1t_indicator(C, one) == l1_indicator(C.col(4)));

  const std::vector<Index> nodes{1, 5, 7, 11};
  double brute = 0.0, all = 0.0;
  for (Index k : nodes) brute = std::max(brute, C.col(k).lpNorm<1>());
  for (Index k = 0; k < C.cols(); ++k) all = std::max(all, C.col(k).lpNorm<1>());
  CHECK(l1t_indicator(C, nodes) == brute);
  CHECK(l1t_indicator(C, nodes) <= all);

  Eigen::MatrixXd flat = Eigen::Vector3d(1.0, -1.0, 2.0).replicate(1, 6);
  CHECK(l1t_indicator(flat, std::vector<Index>{0, 3}) == doctest::Approx(4.0));
  CHECK(l1t_indicator(flat, std::vector<Index>{5}) == doctest::Approx(4.0));
  CHECK_THROWS_AS(l1t_indicator(C, std::vector<Index>{}), InvalidArgument);
}

TEST_CASE("collocation set truncation and validation") {
  CollocationSet s{{4, 9, 1}, {7, 2}};
  CHECK(s.combined() == std::vector<Index>{4, 9, 1, 7, 2});
  const auto t = s.truncated(2);
  CHECK(t.solution_points == std::vector<Index>{4, 9});
  CHECK(t.residual_points == std::vector<Index>{7});
  CHECK(s.truncated(1).size() == 1);
  CHECK_NOTHROW(s.validate(10, 3));
  CHECK_THROWS_AS(s.validate(9, 3), InvalidArgument);
  CHECK_THROWS_AS(s.validate(10, 2), InvalidArgument);
  CollocationSet dup{{4, 9}, {4}};
  CHECK_THROWS_AS(dup.validate(10, 2), InvalidArgument);
}

TEST_CASE("one-term linear model scales as mu1 / mu") {
  const auto p = std::make_shared<LinearDiffusion>(12);
  const Parameter mu1{1.0, 0.5};
  const Eigen::VectorXd u1 = TruthSolver().solve_steady(*p, mu1).u;
  Index pivot = 0;
  u1.cwiseAbs().maxCoeff(&pivot);
  Eigen::MatrixXd W = u1 / u1[pivot];
  const ReducedModel model(p, W, CollocationSet{{pivot}, {}});
  for (double m2 : {0.2, 0.9, 1.7}) {
    const auto c = solve_reduced(model, Parameter{3.0, m2});
    CHECK(c.c[0] == doctest::Approx(u1[pivot] * 0.5 / m2).epsilon(1e-12));
  }
}

TEST_CASE("reconstruct and interpolate") {
  const auto res = small_burgers();
  const auto& m = res.model;
  CHECK(m.reconstruct(Eigen::VectorXd::Zero(m.n())).norm() == 0.0);
  for (Index j = 0; j < m.n(); ++j)
    CHECK((m.reconstruct(Eigen::VectorXd::Unit(m.n(), j)) - m.basis().col(j)).norm() == 0.0);

  const Eigen::VectorXd c = Eigen::Vector4d(0.3, -1.2, 2.0, 0.7);
  const Eigen::VectorXd u = m.reconstruct(c);
  CHECK((m.reconstruct(m.interpolate(u)) - u).lpNorm<Eigen::Infinity>() < 1e-10);
  for (std::size_t j = 0; j < res.snapshots.size(); ++j)
    CHECK((m.reconstruct(m.interpolate(res.snapshots[j])) - res.snapshots[j]).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("restricted blocks match full operators") {
  const auto res = small_burgers();
  const auto& m = res.model;
  const auto& p = m.problem();
  const auto pts = m.points();
  for (std::size_t k = 0; k < p.channels().size(); ++k) {
    const Eigen::MatrixXd full = p.channel_operator(k).interior * m.basis();
    for (Index r = 0; r < m.M(); ++r)
      CHECK((m.channel_block(k).row(r) - full.row(pts[static_cast<std::size_t>(r)])).norm() <= 1e-10 * full.norm());
  }
}

TEST_CASE("reduced residual equals the restricted full residual") {
  for (auto kind : all_problem_kinds()) {
    ProblemConfig cfg{.kind = kind, .K = is_transient(kind) || kind == ProblemKind::steady_burgers ? 40 : 12};
    const auto p = make_problem(cfg);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    const Index n = 3;
    Eigen::MatrixXd W(p->size(), n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < p->size(); ++i) W(i, j) = g(rng);
    CollocationSet pts{{1, 5, 9}, {3, 7}};
    const ReducedModel m(p, W, pts);
    const Parameter mu = center(p->box());
    const Eigen::VectorXd c = Eigen::Vector3d(0.2, -0.1, 0.05), c_prev = Eigen::Vector3d(0.1, 0.0, -0.02);
    const auto idx = m.points();
    Eigen::VectorXd full = p->residual_full(W * c, mu);
    Eigen::VectorXd red = m.reduced_residual(c, mu);
    for (Index r = 0; r < m.M(); ++r) CHECK(red[r] == doctest::Approx(full[idx[static_cast<std::size_t>(r)]]).epsilon(1e-12));
    full = p->residual_full(W * c, mu, W * c_prev, 0.01);
    red = m.reduced_residual(c, mu, &c_prev, 0.01);
    for (Index r = 0; r < m.M(); ++r) CHECK(red[r] == doctest::Approx(full[idx[static_cast<std::size_t>(r)]]).epsilon(1e-12));
  }
}

TEST_CASE("reduced jacobian matches central differences") {
  for (auto kind : all_problem_kinds()) {
    CAPTURE(to_string(kind));
    const auto p = make_problem({.kind = kind, .K = 12});
    const ReducedModel m = random_model(p, 5);
    const Parameter mu = center(p->box());
    const Eigen::Vector3d c(0.3, -0.2, 0.1), v(0.7, 0.4, -1.1);
    for (std::optional<double> dt : {std::optional<double>{}, std::optional<double>{0.05}}) {
      const Eigen::VectorXd c_prev = 0.5 * c;
      const Eigen::VectorXd* prev = dt ? &c_prev : nullptr;
      const Eigen::VectorXd Jv = m.reduced_jacobian(c, mu, dt) * v;
      const double eps = 1e-6;
      const Eigen::VectorXd c_plus = c + eps * v, c_minus = c - eps * v;
      const Eigen::VectorXd fd =
          (m.reduced_residual(c_plus, mu, prev, dt) - m.reduced_residual(c_minus, mu, prev, dt)) / (2 * eps);
      CHECK((fd - Jv).norm() < 1e-5 * Jv.norm());
    }
  }
}

TEST_CASE("trained parameters are reproduced at the collocation points") {
  const auto res = small_burgers(5);
  const auto& m = res.model;
  for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
    for (Index n = static_cast<Index>(i) + 1; n <= m.n(); ++n) {
      const ReducedModel sub = m.truncated(n);
      const auto c = solve_reduced(sub, m.parameters[i]);
      CAPTURE(i);
      CAPTURE(n);
      const Eigen::VectorXd u = sub.reconstruct(c.c);
      double err = 0.0;
      for (Index x : sub.points()) err = std::max(err, std::abs(u[x] - res.snapshots[i][x]));
      CHECK(err < 1e-6);
      CHECK(c.residual_max_norm < 1e-8);
    }
  }
}

TEST_CASE("snapshot transform maps snapshots to basis coefficients") {
  const auto res = small_burgers(5);
  const auto& m = res.model;
  REQUIRE(m.snapshot_transform.rows() == m.n());
  const Eigen::MatrixXd S = m.snapshot_transform;
  CHECK(S.triangularView<Eigen::StrictlyLower>().toDenseMatrix().norm() == 0.0);
  CHECK((m.basis() * S - columns(res.snapshots)).norm() < 1e-10 * columns(res.snapshots).norm());
  for (Index j = 0; j < m.n(); ++j)
    CHECK((m.snapshot_coefficients(S.col(j)) - Eigen::VectorXd::Unit(m.n(), j)).norm() < 1e-10);
  const auto sub = m.truncated(3);
  CHECK(sub.snapshot_transform.rows() == 3);
  CHECK(sub.parameters.size() == 3);
}

TEST_CASE("zero data transient gives zero coefficients") {
  ProblemConfig cfg{.kind = ProblemKind::transient_cubic_rd, .K = 12};
  cfg.forcing_constant = 0.0;
  const auto p = make_problem(cfg);
  const ReducedModel m = random_model(p, 2);
  const auto rt = solve_reduced_transient(m, center(p->box()));
  CHECK(rt.coefficients.norm() == 0.0);
  CHECK(rt.last_index == p->time_grid().steps);
}

TEST_CASE("reduced backward euler step reproduces a truth step in the span") {
  ProblemConfig cfg{.kind = ProblemKind::transient_burgers, .K = 40};
  cfg.burgers_setup = BurgersSetup::b;
  cfg.final_time = 0.02;
  cfg.time_step = 0.01;
  const auto p = make_problem(cfg);
  const Parameter mu{0.1};
  const Trajectory tr = TruthSolver().solve_transient(*p, mu);
  // basis spanning the two nonzero states; EIM-normalize so the model is well posed
  Eigen::MatrixXd W(p->size(), 0);
  std::vector<Index> sp;
  for (Index k = 1; k <= 2; ++k) {
    const auto e = eim_update(tr.state(k), W, sp, sp);
    REQUIRE(e);
    W.conservativeResize(Eigen::NoChange, W.cols() + 1);
    W.col(W.cols() - 1) = e->vector;
    sp.push_back(e->pivot);
  }
  Index free = 0;
  while (std::find(sp.begin(), sp.end(), free) != sp.end()) ++free;
  const std::vector<Index> rp{free};
  const ReducedModel m(p, W, CollocationSet{sp, rp});
  const auto rt = solve_reduced_transient(m, mu);
  for (Index k = 1; k <= 2; ++k) {
    const Eigen::VectorXd u = m.reconstruct(rt.coefficients.col(k));
    double err = 0.0;
    for (Index x : m.points()) err = std::max(err, std::abs(u[x] - tr.state(k)[x]));
    CHECK(err < 1e-8);
  }
}

TEST_CASE("save and load round trip") {
  const auto res = small_burgers(3);
  const auto dir = std::filesystem::temp_directory_path() / "l1roc_test_model";
  std::filesystem::remove_all(dir);
  res.model.save(dir);
  const ReducedModel back = ReducedModel::load(dir);
  CHECK(back.basis() == res.model.basis());
  CHECK(back.collocation().solution_points == res.model.collocation().solution_points);
  CHECK(back.collocation().residual_points == res.model.collocation().residual_points);
  CHECK(back.parameters == res.model.parameters);
  CHECK(back.snapshot_transform == res.model.snapshot_transform);
  CHECK(back.problem().config() == res.model.problem().config());
  const Parameter mu{0.3};
  CHECK(solve_reduced(back, mu).c == solve_reduced(res.model, mu).c);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(ReducedModel::load(dir));
}
