#include <cmath>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "doctest.h"
#include "l1roc/baselines.hpp"
#include "l1roc/errors.hpp"

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

}  // namespace

TEST_CASE("pod of identical snapshots has one mode") {
  const Eigen::VectorXd v = Eigen::Vector4d(1, 2, -2, 4);
  const auto pod = pod_basis(v.replicate(1, 5), 3);
  CHECK(pod.modes.cols() == 1);
  CHECK(pod.rank_limited);
  CHECK(std::abs(std::abs(pod.modes.col(0).dot(v / v.norm())) - 1.0) < 1e-12);
}

TEST_CASE("pod orders modes by energy") {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(3, 2);
  S(0, 0) = 1.0;
  S(2, 1) = 3.0;
  const auto pod = pod_basis(S, 2);
  CHECK(std::abs(pod.modes(2, 0)) == doctest::Approx(1.0));
  CHECK(pod.singular_values[0] == doctest::Approx(3.0));
  CHECK(pod.singular_values[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(pod_basis(S, 3), InvalidArgument);
  CHECK_THROWS_AS(pod_basis(S, 0), InvalidArgument);
}

TEST_CASE("pod truncation error matches the singular value tail") {
  const Eigen::MatrixXd A = random_matrix(20, 8, 17);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const Eigen::VectorXd s = svd.singularValues();
  for (Index k = 1; k < 8; ++k) {
    const auto pod = pod_basis(A, k);
    CHECK((pod.modes.transpose() * pod.modes - Eigen::MatrixXd::Identity(k, k)).norm() < 1e-12);
    const Eigen::MatrixXd E = A - pod.modes * (pod.modes.transpose() * A);
    CHECK(Eigen::JacobiSVD<Eigen::MatrixXd>(E).singularValues()[0] == doctest::Approx(s[k]).epsilon(1e-10));
    CHECK(E.norm() == doctest::Approx(s.tail(8 - k).norm()).epsilon(1e-10));
  }
}

TEST_CASE("random selection draws distinct indices deterministically") {
  const auto a = random_selection(50, 10, 3);
  CHECK(a == random_selection(50, 10, 3));
  CHECK(a != random_selection(50, 10, 4));
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 10);
  for (auto i : a) CHECK(i < 50);
  const auto all = random_selection(7, 7, 1);
  CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == 7);
  CHECK_THROWS_AS(random_selection(5, 6, 0), InvalidArgument);
}

TEST_CASE("metric arithmetic") {
  const Eigen::MatrixXd e = Eigen::MatrixXd::Ones(2, 2), u = Eigen::MatrixXd::Constant(2, 2, 2.0);
  CHECK(frobenius_relative(e, u) == doctest::Approx(0.5));
  const Eigen::Vector2d l2 = l2_per_time(e, 0.25);
  CHECK(l2[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(linf_relative({Eigen::Vector2d(0.1, -0.3), Eigen::Vector2d(0.2, 0.0)},
                      {Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(-3.0, 0.0)}) == doctest::Approx(0.1));
  CHECK_THROWS_AS(frobenius_relative(e, Eigen::MatrixXd::Zero(2, 2)), InvalidArgument);
}

TEST_CASE("log linear fit of an exact exponential") {
  ErrorCurve c;
  for (Index n = 1; n <= 6; ++n) {
    c.n.push_back(n);
    c.error.push_back(3.0 * std::exp(-0.7 * double(n)));
    c.failures.push_back(0);
  }
  c.error[2] = std::numeric_limits<double>::quiet_NaN();
  const auto f = log_linear_fit(c);
  CHECK(f.points == 5);
  CHECK(f.slope == doctest::Approx(-0.7));
  CHECK(f.r_squared == doctest::Approx(1.0));
}

TEST_CASE("summary over curves ignores missing points") {
  ErrorCurve a, b, c;
  for (auto* x : {&a, &b, &c}) x->n = {1, 2};
  a.error = {1.0, 0.1};
  b.error = {3.0, std::numeric_limits<double>::quiet_NaN()};
  c.error = {2.0, 0.3};
  const auto s = summarize({a, b, c});
  CHECK(s.best.error[0] == 1.0);
  CHECK(s.median.error[0] == 2.0);
  CHECK(s.worst.error[0] == 3.0);
  CHECK(s.median.error[1] == doctest::Approx(0.2));
  CHECK(s.worst.failures[1] == 1);
}

TEST_CASE("a model tested on its own training parameter is exact") {
  const auto p = make_problem({.kind = ProblemKind::steady_burgers, .K = 50});
  GreedyOptions o;
  o.max_basis = 1;
  const std::vector<Parameter> one{Parameter{0.3}};
  TruthSolver solver;
  const auto res = greedy_steady(p, one, o, solver);
  const auto refs = compute_references(*p, one, solver);
  const auto curve = evaluate_error(res.model, refs);
  REQUIRE(curve.error.size() == 1);
  CHECK(curve.error[0] < 1e-6);
  CHECK(curve.failures[0] == 0);
  CHECK(curve.metric == ErrorMetric::linf_relative);
}

TEST_CASE("error curves on steady burgers") {
  const auto p = make_problem({.kind = ProblemKind::steady_burgers, .K = 60});
  const auto train = parse_mesh({"log:0.05:1:20"});
  const auto test = parse_mesh({"logmid:0.05:1:20"});
  TruthSolver solver;
  GreedyOptions o;
  o.max_basis = 6;
  const auto res = greedy_steady(p, train, o, solver);
  const auto refs = compute_references(*p, test, solver, 2);
  const auto curve = evaluate_error(res.model, refs, {.threads = 2});
  CHECK(curve.n == std::vector<Index>{1, 2, 3, 4, 5, 6});
  CHECK(curve.error.back() < curve.error.front());
  const auto again = evaluate_error(res.model, refs);
  for (std::size_t i = 0; i < curve.error.size(); ++i)
    if (!std::isnan(curve.error[i])) CHECK(again.error[i] == curve.error[i]);
  const auto fit = log_linear_fit(curve);
  CHECK(fit.slope < 0.0);

  // projection onto the span is never worse than the reduced solve
  const auto proj = projection_error(res.model.basis(), refs, false);
  for (std::size_t i = 0; i < curve.error.size(); ++i)
    if (!std::isnan(curve.error[i])) CHECK(proj.error[i] <= curve.error[i] * (1 + 1e-12) + 1e-15);

  // POD of the training snapshots beats any other basis of the same size in the Frobenius sense
  const auto train_refs = compute_references(*p, train, solver);
  Eigen::MatrixXd S(p->size(), static_cast<Index>(train.size()));
  for (std::size_t j = 0; j < train.size(); ++j) S.col(static_cast<Index>(j)) = train_refs.solutions[j];
  const auto pod = pod_basis(S, 6);
  const auto rnd = random_basis(p, train, 6, 5, o, solver);
  for (Index n = 1; n <= 6; ++n) {
    auto frob = [&](const Eigen::MatrixXd& B) {
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(B.leftCols(n));
      const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(B.rows(), n);
      return (S - Q * (Q.transpose() * S)).norm();
    };
    CHECK(frob(pod.modes) <= frob(res.model.basis()) * (1 + 1e-10));
    CHECK(frob(pod.modes) <= frob(rnd.model.basis()) * (1 + 1e-10));
  }
}

TEST_CASE("random basis uses the drawn parameters") {
  const auto p = make_problem({.kind = ProblemKind::steady_burgers, .K = 40});
  const auto train = parse_mesh({"log:0.05:1:12"});
  GreedyOptions o;
  const auto res = random_basis(p, train, 4, 9, o, TruthSolver());
  const auto draw = random_selection(train.size(), 4, 9);
  REQUIRE(res.history.steps.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(res.history.steps[k].parameter_index == draw[k]);
  CHECK(res.model.M() == 7);
}

TEST_CASE("transient error uses the mean relative frobenius metric") {
  ProblemConfig c{.kind = ProblemKind::transient_cubic_rd, .K = 10};
  c.final_time = 0.1;
  c.time_step = 0.01;
  const auto p = make_problem(c);
  const std::vector<Parameter> train = parse_mesh({"1,3,5", "0.2,1"});
  GreedyOptions o;
  o.max_basis = 4;
  TruthSolver solver;
  const auto res = greedy_transient(p, train, o, solver);
  const auto refs = compute_references(*p, {Parameter{2.0, 0.5}}, solver);
  CHECK(refs.solutions[0].cols() == 11);
  const auto curve = evaluate_error(res.model, refs);
  CHECK(curve.metric == ErrorMetric::frobenius_relative);
  CHECK(curve.n.size() == static_cast<std::size_t>(res.model.n()));
  const auto proj = projection_error(res.model.basis(), refs, true);
  CHECK(proj.metric == ErrorMetric::frobenius_relative);
  CHECK(proj.error.back() <= proj.error.front());
}
