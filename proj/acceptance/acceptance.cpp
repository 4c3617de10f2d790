// Acceptance suite. Prints one PASS/FAIL line per criterion; exit status is
// nonzero when any criterion fails. Pass criterion ids (A1 ... A13) to run a
// subset; intermediate CSVs go under --out.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <CLI11.hpp>

#include "l1roc/experiment.hpp"
#include "l1roc/matrix_io.hpp"

using namespace l1roc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

std::string lin(const Interval& iv, int n) { return "lin:" + num(iv.lo, 17) + ":" + num(iv.hi, 17) + ":" + std::to_string(n); }

// Cubic reaction-diffusion meshes on the 128 x 64 parameter grid, h = step of that grid.
const std::string kH1 = "4.8/127", kH2 = "1.8/63";
std::vector<std::string> cubic_train(int stride) {
  const std::string s = std::to_string(stride);
  return {"0.2:" + s + "*" + kH1 + ":5", "0.2:" + s + "*" + kH2 + ":2"};
}
std::vector<std::string> cubic_test() {
  return {"0.2+2*" + kH1 + ":4*" + kH1 + ":5-2*" + kH1, "0.2+2*" + kH2 + ":4*" + kH2 + ":2-2*" + kH2};
}

struct Trained {
  std::shared_ptr<const Problem> problem;
  std::vector<Parameter> train;
  GreedyResult result;
};

class Suite {
 public:
  explicit Suite(fs::path out) : out_(std::move(out)) { fs::create_directories(out_); }

  const std::vector<Trained>& small_models() {
    if (!small_.empty()) return small_;
    struct Setup {
      ProblemKind kind;
      Index K;
      std::vector<int> points;
      Index N;
    };
    const std::vector<Setup> setups{
        {ProblemKind::steady_burgers, 60, {20}, 6},        {ProblemKind::cubic_rd, 24, {8, 6}, 8},
        {ProblemKind::poisson_boltzmann, 24, {6, 6}, 6},   {ProblemKind::nonlinear_convection, 24, {6, 6}, 6},
        {ProblemKind::transient_burgers, 40, {6}, 5},      {ProblemKind::transient_cubic_rd, 16, {4, 3}, 5},
    };
    for (const auto& s : setups) {
      ProblemConfig pc;
      pc.kind = s.kind;
      pc.K = s.K;
      if (s.kind == ProblemKind::transient_burgers) {
        pc.burgers_setup = BurgersSetup::a;
        pc.final_time = 0.2;
        pc.time_step = 0.01;
      } else if (s.kind == ProblemKind::transient_cubic_rd) {
        pc.final_time = 0.2;
        pc.time_step = 0.02;
      }
      pc = resolved(pc);
      std::vector<std::string> axes;
      for (std::size_t d = 0; d < s.points.size(); ++d) axes.push_back(lin((*pc.box)[d], s.points[d]));
      const auto p = make_problem(pc);
      const auto train = parse_mesh(axes);
      GreedyOptions o;
      o.max_basis = s.N;
      o.seed = 7;
      TruthSolver solver;
      small_.push_back({p, train, p->is_transient() ? greedy_transient(p, train, o, solver)
                                                    : greedy_steady(p, train, o, solver)});
    }
    return small_;
  }

  CompareReport& burgers_compare() {
    if (burgers_) return *burgers_;
    ExperimentConfig c;
    c.problem.kind = ProblemKind::steady_burgers;
    c.problem.K = 100;
    c.train_mesh = {"log:0.05:1:50"};
    c.test_mesh = {"logmid:0.05:1:50"};
    c.require_disjoint = true;
    c.max_basis = 10;
    c.seed = 0;
    c.random_seeds = 15;
    c.output = out_ / "steady_burgers";
    burgers_ = cmd_compare(c);
    burgers_history_ = read_selected(c.output / "l1-roc" / "history.csv");
    return *burgers_;
  }
  const std::vector<double>& burgers_selected() {
    burgers_compare();
    return burgers_history_;
  }

  const fs::path& out() const { return out_; }

 private:
  static std::vector<double> read_selected(const fs::path& history) {
    std::istringstream is(read_text(history));
    std::string line;
    std::getline(is, line);
    std::vector<double> mu;
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      std::string cell;
      std::getline(ls, cell, ',');
      std::getline(ls, cell, ',');
      std::getline(ls, cell, ',');
      mu.push_back(std::stod(cell));
    }
    return mu;
  }

  fs::path out_;
  std::vector<Trained> small_;
  std::optional<CompareReport> burgers_;
  std::vector<double> burgers_history_;
};

const ErrorCurve& curve(const CompareReport& r, const std::string& kind) {
  for (const auto& c : r.curves)
    if (c.basis_kind == kind) return c;
  throw std::runtime_error("no curve " + kind);
}

Outcome a1(Suite& s) {
  double worst = 0.0;
  for (const auto& t : s.small_models()) {
    const auto& m = t.result.model;
    const auto& sp = m.collocation().solution_points;
    for (Index i = 0; i < m.n(); ++i)
      for (Index j = 0; j < m.n(); ++j) {
        const double want = i == j ? 1.0 : 0.0;
        const double got = m.basis()(sp[static_cast<std::size_t>(i)], j);
        if (j >= i) worst = std::max(worst, std::abs(got - want));
      }
  }
  return {worst <= 1e-12, "max deviation from unit lower triangular " + num(worst) + " over 6 problems"};
}

Outcome a2(Suite& s) {
  std::string bad;
  for (const auto& t : s.small_models()) {
    const auto& m = t.result.model;
    const auto& c = m.collocation();
    std::set<Index> all(c.solution_points.begin(), c.solution_points.end());
    all.insert(c.residual_points.begin(), c.residual_points.end());
    const bool ok = m.M() == 2 * m.n() - 1 && static_cast<Index>(all.size()) == m.M() &&
                    static_cast<Index>(c.residual_points.size()) == m.n() - 1;
    if (!ok) bad += " " + std::string(t.problem->id());
  }
  return {bad.empty(), bad.empty() ? "M = 2N - 1 with disjoint point sets for 6 problems" : "violated for" + bad};
}

Outcome a3(Suite& s) {
  double err = 0.0, res = 0.0;
  int solves = 0;
  for (const auto& t : s.small_models()) {
    if (t.problem->is_transient()) continue;
    const auto& m = t.result.model;
    for (Index i = 1; i <= m.n(); ++i) {
      const Parameter& mu = m.parameters[static_cast<std::size_t>(i - 1)];
      const Eigen::VectorXd& snap = t.result.snapshots[static_cast<std::size_t>(i - 1)];
      for (Index n = i; n <= m.n(); ++n) {
        const ReducedModel sub = m.truncated(n);
        const Coefficients c = solve_reduced(sub, mu);
        const Eigen::VectorXd u = sub.reconstruct(c.c);
        for (Index x : sub.points()) err = std::max(err, std::abs(u[x] - snap[x]));
        res = std::max(res, c.residual_norm);
        ++solves;
      }
    }
  }
  return {err < 1e-6 && res < 1e-8, std::to_string(solves) + " solves, max error at X^M " + num(err) +
                                        ", max reduced residual " + num(res)};
}

Outcome a4(Suite& s) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  double worst_reduced = 0.0, worst_full = 0.0;
  for (const auto& t : s.small_models()) {
    const auto& m = t.result.model;
    const Problem& p = *t.problem;
    const std::optional<double> dt = p.is_transient() ? std::optional<double>(p.time_grid().dt) : std::nullopt;
    for (int trial = 0; trial < 3; ++trial) {
      const std::size_t pick = static_cast<std::size_t>(trial) % t.result.snapshots.size();
      const Parameter& mu = m.parameters[pick];
      const Eigen::VectorXd& snap = t.result.snapshots[pick];
      const double scale = std::max(snap.lpNorm<Eigen::Infinity>(), 1e-3);

      Eigen::VectorXd c = m.interpolate(snap);
      for (Index k = 0; k < c.size(); ++k) c[k] += 0.05 * g(rng) * (1.0 + std::abs(c[k]));
      const Eigen::VectorXd c_prev = 0.9 * c;
      const Eigen::VectorXd* prev = dt ? &c_prev : nullptr;
      const Eigen::MatrixXd J = m.reduced_jacobian(c, mu, dt);
      Eigen::MatrixXd fd(J.rows(), J.cols());
      for (Index k = 0; k < c.size(); ++k) {
        const double eps = 1e-6 * (1.0 + std::abs(c[k]));
        Eigen::VectorXd cp = c, cm = c;
        cp[k] += eps;
        cm[k] -= eps;
        fd.col(k) = (m.reduced_residual(cp, mu, prev, dt) - m.reduced_residual(cm, mu, prev, dt)) / (2 * eps);
      }
      worst_reduced = std::max(worst_reduced, (fd - J).norm() / J.norm());

      Eigen::VectorXd u = snap;
      for (Index i = 0; i < u.size(); ++i) u[i] += 0.05 * scale * g(rng);
      const Eigen::VectorXd u_prev = 0.9 * u;
      const SparseMatrix Jf = p.jacobian_full(u, mu, dt);
      for (int dir = 0; dir < 3; ++dir) {
        Eigen::VectorXd v(u.size());
        for (Index i = 0; i < v.size(); ++i) v[i] = g(rng);
        const double eps = 1e-6 * scale / v.lpNorm<Eigen::Infinity>();
        const auto R = [&](const Eigen::VectorXd& w) {
          return dt ? p.residual_full(w, mu, u_prev, *dt) : p.residual_full(w, mu);
        };
        const Eigen::VectorXd Jv = Jf * v;
        const Eigen::VectorXd d = (R(u + eps * v) - R(u - eps * v)) / (2 * eps);
        worst_full = std::max(worst_full, (d - Jv).norm() / Jv.norm());
      }
    }
  }
  return {worst_reduced < 1e-5 && worst_full < 1e-5,
          "max relative deviation: reduced " + num(worst_reduced) + ", full " + num(worst_full) + " (6 problems)"};
}

Outcome a5(Suite& s) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& r = s.burgers_compare();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& c = curve(r, "l1-roc");
  const auto fit = log_linear_fit(c);
  const double ratio = c.error.back() / c.error.front();
  return {fit.slope < 0 && fit.r_squared > 0.8 && ratio < 1e-2 && secs < 120,
          "slope " + num(fit.slope) + ", R^2 " + num(fit.r_squared) + ", E(10)/E(1) " + num(ratio) + ", " +
              num(secs) + " s"};
}

Outcome a6(Suite& s) {
  const auto& mu = s.burgers_selected();
  const auto low = std::count_if(mu.begin(), mu.end(), [](double m) { return m <= 0.525; });
  return {low >= 6, std::to_string(low) + " of " + std::to_string(mu.size()) + " selected parameters in [0.05, 0.525]"};
}

struct CubicTiming {
  Index K;
  double online;
  double truth;
};
std::vector<CubicTiming> cubic_timings;

const std::vector<CubicTiming>& cubic_timing(Suite& s) {
  if (!cubic_timings.empty()) return cubic_timings;
  const Parameter mu{4.55, 0.42};
  for (Index K : {100, 200, 400}) {
    ProblemConfig pc;
    pc.kind = ProblemKind::cubic_rd;
    pc.K = K;
    const auto p = make_problem(pc);
    GreedyOptions o;
    o.max_basis = 40;
    const TruthSolver solver;
    const GreedyResult r = greedy_steady(p, parse_mesh(cubic_train(8)), o, solver);
    r.model.save(s.out() / ("cubic_K" + std::to_string(K)) / "model");
    const double online = median_seconds(101, [&] { (void)solve_reduced(r.model, mu); });
    double truth = std::numeric_limits<double>::quiet_NaN();
    if (K == 400) truth = median_seconds(5, [&] { (void)solver.solve_steady(*p, mu); });
    cubic_timings.push_back({K, online, truth});
  }
  return cubic_timings;
}

Outcome a7(Suite& s) {
  const auto& t = cubic_timing(s);
  double lo = t[0].online, hi = t[0].online;
  std::string d;
  for (const auto& x : t) {
    lo = std::min(lo, x.online), hi = std::max(hi, x.online);
    d += "K=" + std::to_string(x.K) + " " + num(x.online * 1e3) + " ms, ";
  }
  return {hi / lo < 2.0, d + "max/min " + num(hi / lo)};
}

Outcome a8(Suite& s) {
  const auto& t = cubic_timing(s).back();
  const double speedup = t.truth / t.online;
  return {speedup >= 100.0, "K=400 truth " + num(t.truth) + " s, online " + num(t.online * 1e3) + " ms, speedup " +
                                num(speedup, 4)};
}

Outcome a9(Suite& s) {
  ExperimentConfig c;
  c.problem.kind = ProblemKind::cubic_rd;
  c.problem.K = 200;
  c.train_mesh = cubic_train(4);
  c.max_basis = 40;
  c.reps = 5;
  c.queries = {Parameter{4.55, 0.42}};
  c.output = s.out() / "cubic_bench";
  const BenchReport r = cmd_bench(c);
  const auto& l1 = r.rows[0];
  const auto& res = r.rows[1];
  const auto in_range = [](const std::optional<long>& b) { return b && *b >= 50 && *b <= 1000; };
  const auto show = [](const std::optional<long>& b) { return b ? std::to_string(*b) : std::string("never"); };
  const bool pass = l1.break_even && res.break_even && *l1.break_even < *res.break_even && in_range(l1.break_even) &&
                    in_range(res.break_even);
  return {pass, "break-even l1-roc " + show(l1.break_even) + " (offline " + num(l1.offline_seconds) + " s), res-roc " +
                    show(res.break_even) + " (offline " + num(res.offline_seconds) + " s), truth " +
                    num(r.truth_seconds) + " s"};
}

std::string check_order(const CompareReport& r, const std::string& name) {
  const auto& pod = curve(r, "pod");
  const auto& l1 = curve(r, "l1-roc");
  const auto& med = curve(r, "rand-median");
  const std::size_t N = l1.n.size();
  int bad = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = N / 2; k < N; ++k) {
    const bool ok = !std::isnan(l1.error[k]) && pod.error[k] <= l1.error[k] && l1.error[k] <= med.error[k];
    if (!ok) ++bad;
    else gap = std::min(gap, med.error[k] / l1.error[k]);
  }
  return name + ": " + std::to_string(bad) + " violations for n=" + std::to_string(N / 2 + 1) + ".." +
         std::to_string(N) + ", min rand-median/l1 " + num(gap) + (bad ? " FAIL" : "");
}

Outcome a10(Suite& s) {
  ExperimentConfig c;
  c.problem.kind = ProblemKind::cubic_rd;
  c.problem.K = 48;
  c.train_mesh = cubic_train(4);
  c.test_mesh = cubic_test();
  c.require_disjoint = true;
  c.max_basis = 40;
  c.random_seeds = 15;
  c.output = s.out() / "cubic_compare";
  const CompareReport cubic = cmd_compare(c);
  const std::string a = check_order(cubic, "cubic-rd"), b = check_order(s.burgers_compare(), "steady-burgers");
  const bool pass = a.find("FAIL") == std::string::npos && b.find("FAIL") == std::string::npos;
  return {pass, a + "; " + b};
}

Outcome a11(Suite& s) {
  ProblemConfig pc;
  pc.kind = ProblemKind::transient_cubic_rd;
  pc.K = 64;
  pc.final_time = 1.0;
  pc.time_step = 0.01;
  const auto p = make_problem(pc);
  const auto train = parse_mesh({"lin:1:5:16", "lin:0.2:1:8"});
  const auto test = parse_mesh({"lin:1.2:4.8:4", "lin:0.3:0.9:3"});
  GreedyOptions o;
  o.max_basis = 30;
  const TruthSolver solver;
  const GreedyResult r = greedy_transient(p, train, o, solver);
  const fs::path dir = s.out() / "transient_cubic";
  fs::create_directories(dir);
  write_history_csv(dir / "history.csv", r.history, *p);
  write_params_csv(dir / "params.csv", train, r.history);
  write_collocation_csv(dir / "collocation.csv", r.model);
  const ErrorCurve e = evaluate_error(r.model, compute_references(*p, test, solver), {});
  write_errors_csv(dir / "errors.csv", {e});
  int mult = 0;
  for (const auto& st : r.history.steps) mult = std::max(mult, st.multiplicity);
  const auto fit = log_linear_fit(e);
  const double ratio = e.error.back() / e.error.front();
  return {ratio < 1e-2 && fit.slope < 0 && mult > 1,
          "N=" + std::to_string(r.model.n()) + ", E(N)/E(1) " + num(ratio) + ", slope " + num(fit.slope) +
              ", max multiplicity " + std::to_string(mult)};
}

Outcome a12(Suite& s) {
  ProblemConfig pc;
  pc.kind = ProblemKind::transient_burgers;
  pc.burgers_setup = BurgersSetup::b;
  pc.K = 200;
  pc.final_time = 2.0;
  pc.time_step = 1e-3;
  const auto p = make_problem(pc);
  GreedyOptions o;
  o.max_basis = 15;
  const TruthSolver solver;
  const GreedyResult r = greedy_transient(p, parse_mesh({"log:0.005:1:20"}), o, solver);
  const double cell = p->grid().step(0);
  std::string d;
  bool pass = r.model.n() == 15;
  std::ostringstream csv;
  csv << "mu,n,time_index,time,error\n";
  for (double m : {0.01, 0.1, 1.0}) {
    const Parameter mu{m};
    const Trajectory truth = solver.solve_transient(*p, mu);
    double final_err[2] = {NAN, NAN};
    int slot = 0;
    for (Index n : {Index(5), Index(15)}) {
      const ReducedModel sub = r.model.truncated(std::min(n, r.model.n()));
      try {
        const auto rt = solve_reduced_transient(sub, mu);
        const Eigen::VectorXd e = l2_per_time(sub.basis() * rt.coefficients - truth.states, cell);
        final_err[slot] = e[e.size() - 1];
        for (Index k = 0; k < e.size(); k += 10)
          csv << m << ',' << n << ',' << k << ',' << p->time_grid().time(k) << ',' << e[k] << '\n';
      } catch (const ConvergenceError&) {
      }
      ++slot;
    }
    const double ratio = final_err[0] / final_err[1];
    pass = pass && ratio >= 10.0;
    d += "mu=" + num(m) + " " + num(ratio) + "x; ";
  }
  write_text(s.out() / "transient_burgers_l2.csv", csv.str());
  return {pass, "final-time L2 error N=5 / N=15: " + d};
}

Outcome a13(Suite&) {
  std::string d;
  bool pass = true;
  for (auto kind : {ProblemKind::steady_burgers, ProblemKind::cubic_rd}) {
    ProblemConfig pc;
    pc.kind = kind;
    pc.K = kind == ProblemKind::cubic_rd ? 32 : 100;
    const auto p = make_problem(pc);
    const auto train = kind == ProblemKind::cubic_rd ? parse_mesh(cubic_train(8)) : parse_mesh({"log:0.05:1:50"});
    GreedyOptions o;
    o.max_basis = 10;
    o.indicator = Indicator::l1;
    const TruthSolver solver;
    const GreedyResult r = greedy_steady(p, train, o, solver);
    for (const auto& st : r.history.steps) pass = pass && st.truth_invocations == 1;
    pass = pass && solver.invocations() == r.history.steps.size();
    d += std::string(p->id()) + " " + std::to_string(solver.invocations()) + " calls in " +
         std::to_string(r.history.steps.size()) + " iterations; ";
  }
  return {pass, d};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string out = "acceptance_out";
  std::vector<std::string> only;
  app.add_option("--out", out, "directory for intermediate CSVs");
  app.add_option("criteria", only, "criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome(Suite&)>>> all{
      {"A1", a1}, {"A2", a2}, {"A3", a3},   {"A4", a4},   {"A5", a5},   {"A6", a6},  {"A7", a7},
      {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}, {"A12", a12}, {"A13", a13}};
  Suite suite(out);
  int failed = 0;
  std::ostringstream summary;
  summary << "criterion,result,seconds,detail\n";
  for (const auto& [id, fn] : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn(suite);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << id << (id.size() < 3 ? "  " : " ") << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ["
              << num(secs) << " s]" << std::endl;
    std::string quoted = o.detail;
    std::replace(quoted.begin(), quoted.end(), '"', '\'');
    summary << id << ',' << (o.pass ? "pass" : "fail") << ',' << secs << ",\"" << quoted << "\"\n";
    failed += !o.pass;
  }
  write_text(fs::path(out) / "summary.csv", summary.str());
  return failed ? 1 : 0;
}
