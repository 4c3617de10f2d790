#include "l1roc/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <Eigen/Core>

#include "json_convert.hpp"
#include "l1roc/errors.hpp"
#include "l1roc/matrix_io.hpp"

#ifndef L1ROC_VERSION
#define L1ROC_VERSION "0.0.0"
#endif

namespace l1roc {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string method_name(Indicator indicator) { return indicator == Indicator::l1 ? "l1-roc" : "res-roc"; }

void say(std::ostream* log, const std::string& msg) {
  if (log) *log << msg << std::endl;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "problem", "K",      "box",     "forcing_constant", "final_time", "time_step", "burgers_setup",
      "initial_value", "train", "test", "disjoint", "N",  "indicator", "l1_coordinates", "seed",
      "threads", "reps", "output", "truth", "reduced", "compare", "bench", "report"};
  return keys;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::vector<std::string> mesh_from_json(const json& j, const char* key) {
  if (!j.is_array() || j.empty()) throw FormatError(std::string(key) + " must be a non-empty array of axis specs");
  std::vector<std::string> out;
  for (const auto& a : j) {
    if (!a.is_string()) throw FormatError(std::string(key) + " must be a non-empty array of axis specs");
    out.push_back(a.get<std::string>());
  }
  return out;
}

std::vector<Parameter> parameters_from_json(const json& j, const char* key) {
  if (!j.is_array()) throw FormatError(std::string(key) + " must be an array of parameters");
  std::vector<Parameter> out;
  for (const auto& p : j) out.push_back(parameter_from_json(p));
  return out;
}

json config_json(const ExperimentConfig& c) {
  json j = to_json(resolved(c.problem));
  j["train"] = c.train_mesh;
  j["test"] = c.test_mesh;
  j["disjoint"] = c.require_disjoint;
  j["N"] = c.max_basis;
  j["indicator"] = std::string(to_string(c.indicator));
  j["l1_coordinates"] = std::string(to_string(c.l1_coordinates));
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["reps"] = c.reps;
  j["output"] = c.output.string();
  j["truth"] = {{"tolerance", c.truth.tolerance},
                {"roundoff_factor", c.truth.roundoff_factor},
                {"max_iterations", c.truth.max_iterations},
                {"update_tolerance", c.truth.update_tolerance}};
  j["reduced"] = {{"max_iterations", c.reduced.max_iterations},
                  {"residual_tolerance", c.reduced.residual_tolerance},
                  {"step_tolerance", c.reduced.step_tolerance},
                  {"rank_threshold", c.reduced.rank_threshold},
                  {"max_halvings", c.reduced.max_halvings}};
  j["compare"] = {{"random_seeds", c.random_seeds}, {"pod_time_stride", c.pod_time_stride}};
  json q = json::array();
  for (const auto& p : c.queries) q.push_back(to_json(p));
  j["bench"] = {{"queries", q}, {"max_queries", c.max_queries}};
  json rp = json::array();
  for (const auto& p : c.report_parameters) rp.push_back(to_json(p));
  j["report"] = {{"parameters", rp}, {"n", c.report_n}};
  return j;
}

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config, const std::string& hash,
                    std::uint64_t seed, const std::vector<std::string>& outputs, const json& timings,
                    const json& extra = json::object()) {
  json m;
  m["tool"] = "l1roc";
  m["version"] = L1ROC_VERSION;
  m["command"] = command;
  m["config_hash"] = hash;
  m["seed"] = seed;
  m["config"] = config;
  m["outputs"] = outputs;
  m["build"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"compiler", __VERSION__},
                {"cxx", __cplusplus}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  m["timings"] = timings;
  m["created"] = iso_now();
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

GreedyOptions greedy_options(const ExperimentConfig& c, Indicator indicator) {
  GreedyOptions o;
  o.max_basis = c.max_basis;
  o.indicator = indicator;
  o.l1_coordinates = c.l1_coordinates;
  o.seed = c.seed;
  o.threads = c.threads;
  o.reduced = c.reduced;
  return o;
}

GreedyResult train_model(const std::shared_ptr<const Problem>& p, const std::vector<Parameter>& train,
                         const GreedyOptions& o, const TruthSolver& solver) {
  return p->is_transient() ? greedy_transient(p, train, o, solver) : greedy_steady(p, train, o, solver);
}

// history, collocation, params and the model itself under `dir`
std::vector<std::string> write_training(const fs::path& dir, const GreedyResult& r, const std::vector<Parameter>& train) {
  fs::create_directories(dir);
  write_history_csv(dir / "history.csv", r.history, r.model.problem());
  write_collocation_csv(dir / "collocation.csv", r.model);
  write_params_csv(dir / "params.csv", train, r.history);
  r.model.save(dir / "model");
  std::vector<std::string> out{"history.csv", "collocation.csv", "params.csv"};
  std::vector<std::string> model_files;
  for (const auto& e : fs::directory_iterator(dir / "model")) model_files.push_back("model/" + e.path().filename().string());
  std::sort(model_files.begin(), model_files.end());
  out.insert(out.end(), model_files.begin(), model_files.end());
  return out;
}

std::vector<Parameter> query_points(const ExperimentConfig& c) {
  if (!c.queries.empty()) return c.queries;
  if (!c.test_mesh.empty()) return {c.test().front()};
  return {c.train().front()};
}

double cell_measure(const Grid& g) { return g.dim() == 1 ? g.step(0) : g.step(0) * g.step(1); }

struct Timings {
  json j = json::object();
  void add(const std::string& method, const std::string& quantity, double value) { j[method][quantity] = value; }
};

void write_timings_csv(const fs::path& path, const json& t) {
  std::ostringstream os;
  os << "method,quantity,value\n";
  for (auto m = t.begin(); m != t.end(); ++m)
    for (auto q = m.value().begin(); q != m.value().end(); ++q)
      os << m.key() << ',' << q.key() << ',' << (q.value().is_null() ? "" : num(q.value().get<double>())) << '\n';
  write_text(path, os.str());
}

}  // namespace

std::vector<Parameter> ExperimentConfig::train() const { return parse_mesh(train_mesh); }
std::vector<Parameter> ExperimentConfig::test() const { return parse_mesh(test_mesh); }

void ExperimentConfig::validate() const {
  const ProblemConfig pc = resolved(problem);
  const ParameterBox& box = *pc.box;
  if (train_mesh.empty()) throw InvalidArgument("config: training mesh is required");
  if (train_mesh.size() != box.dimension())
    throw InvalidArgument("config: training mesh needs one axis per parameter component");
  if (!test_mesh.empty() && test_mesh.size() != box.dimension())
    throw InvalidArgument("config: test mesh needs one axis per parameter component");
  if (max_basis < 1) throw InvalidArgument("config: N must be positive");
  if (threads < 1) throw InvalidArgument("config: threads must be positive");
  if (reps < 1) throw InvalidArgument("config: reps must be positive");
  if (random_seeds < 0) throw InvalidArgument("config: random_seeds must be nonnegative");
  if (pod_time_stride < 1) throw InvalidArgument("config: pod_time_stride must be positive");
  const auto tr = train();
  if (!is_transient(pc.kind) && static_cast<std::size_t>(max_basis) > tr.size())
    throw InvalidArgument("config: N exceeds the size of the training set");
  const auto inside = [&](const std::vector<Parameter>& ps, const char* what) {
    for (const auto& p : ps)
      if (!box.contains(p)) throw InvalidArgument(std::string("config: ") + what + " parameter " + p.to_string() + " lies outside the box");
  };
  inside(tr, "training");
  inside(queries, "query");
  inside(report_parameters, "report");
  for (Index n : report_n)
    if (n < 1 || n > max_basis) throw InvalidArgument("config: report n must lie in 1..N");
  if (test_mesh.empty()) return;
  const auto te = test();
  inside(te, "test");
  if (require_disjoint) {
    for (const auto& a : tr)
      for (const auto& b : te) {
        bool same = true;
        for (std::size_t k = 0; k < a.size(); ++k) same = same && std::abs(a[k] - b[k]) <= 1e-12 * box[k].width();
        if (same) throw InvalidArgument("config: training and test sets share the parameter " + a.to_string());
      }
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("config: top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known_keys().count(it.key())) throw FormatError("config: unknown key '" + it.key() + "'");
  ExperimentConfig c;
  try {
    c.problem = problem_config_from_json(j);
    c.train_mesh = mesh_from_json(j.at("train"), "train");
    if (j.contains("test")) c.test_mesh = mesh_from_json(j.at("test"), "test");
    read(j, "disjoint", c.require_disjoint);
    read(j, "N", c.max_basis);
    if (j.contains("indicator")) c.indicator = parse_indicator(j.at("indicator").get<std::string>());
    if (j.contains("l1_coordinates")) c.l1_coordinates = parse_l1_coordinates(j.at("l1_coordinates").get<std::string>());
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
    read(j, "reps", c.reps);
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("truth")) {
      const auto& t = j.at("truth");
      read(t, "tolerance", c.truth.tolerance);
      read(t, "roundoff_factor", c.truth.roundoff_factor);
      read(t, "max_iterations", c.truth.max_iterations);
      read(t, "update_tolerance", c.truth.update_tolerance);
    }
    if (j.contains("reduced")) {
      const auto& r = j.at("reduced");
      read(r, "max_iterations", c.reduced.max_iterations);
      read(r, "residual_tolerance", c.reduced.residual_tolerance);
      read(r, "step_tolerance", c.reduced.step_tolerance);
      read(r, "rank_threshold", c.reduced.rank_threshold);
      read(r, "max_halvings", c.reduced.max_halvings);
    }
    if (j.contains("compare")) {
      read(j.at("compare"), "random_seeds", c.random_seeds);
      read(j.at("compare"), "pod_time_stride", c.pod_time_stride);
    }
    if (j.contains("bench")) {
      const auto& b = j.at("bench");
      if (b.contains("queries")) c.queries = parameters_from_json(b.at("queries"), "bench.queries");
      read(b, "max_queries", c.max_queries);
    }
    if (j.contains("report")) {
      const auto& r = j.at("report");
      if (r.contains("parameters")) c.report_parameters = parameters_from_json(r.at("parameters"), "report.parameters");
      read(r, "n", c.report_n);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) { return parse_config(read_text(path)); }

std::string to_json_text(const ExperimentConfig& config) { return config_json(config).dump(); }

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::optional<long> break_even(double offline_seconds, double truth_seconds, double online_seconds) {
  if (offline_seconds < 0.0) throw InvalidArgument("break_even: negative offline time");
  const double gain = truth_seconds - online_seconds;
  if (!(gain > 0.0)) return std::nullopt;
  return static_cast<long>(std::floor(offline_seconds / gain)) + 1;
}

void write_history_csv(const fs::path& path, const GreedyHistory& history, const Problem& problem) {
  const std::size_t dim = problem.box().dimension();
  std::ostringstream os;
  os << "n,parameter_index";
  for (std::size_t k = 0; k < dim; ++k) os << ",mu_" << k + 1;
  os << ",time_index,time,multiplicity,indicator,solution_point,residual_point,truth_seconds,sweep_seconds,"
        "cumulative_seconds,truth_invocations,sweep_failures\n";
  for (const auto& s : history.steps) {
    os << s.n << ',' << s.parameter_index;
    for (std::size_t k = 0; k < dim; ++k) os << ',' << num(s.mu[k]);
    if (s.time_index) os << ',' << *s.time_index << ',' << num(problem.time_grid().time(*s.time_index));
    else os << ",,";
    os << ',' << s.multiplicity << ',' << num(s.indicator) << ',' << s.solution_point << ','
       << (s.residual_point ? std::to_string(*s.residual_point) : "") << ',' << num(s.truth_seconds) << ','
       << num(s.sweep_seconds) << ',' << num(s.cumulative_seconds) << ',' << s.truth_invocations << ','
       << s.sweep_failures << '\n';
  }
  write_text(path, os.str());
}

void write_collocation_csv(const fs::path& path, const ReducedModel& model) {
  const Grid& g = model.problem().grid();
  std::ostringstream os;
  os << "kind,order,node,x,y\n";
  const auto emit = [&](const char* kind, const std::vector<Index>& nodes) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      os << kind << ',' << i + 1 << ',' << nodes[i] << ',' << num(g.coord(nodes[i], 0)) << ','
         << (g.dim() == 2 ? num(g.coord(nodes[i], 1)) : "") << '\n';
    }
  };
  emit("solution", model.collocation().solution_points);
  emit("residual", model.collocation().residual_points);
  write_text(path, os.str());
}

void write_params_csv(const fs::path& path, const std::vector<Parameter>& train, const GreedyHistory& history) {
  std::vector<int> count(train.size(), 0);
  std::vector<Index> first(train.size(), 0);
  for (const auto& s : history.steps) {
    if (s.parameter_index >= train.size()) throw InvalidArgument("params csv: history does not match training set");
    if (count[s.parameter_index]++ == 0) first[s.parameter_index] = s.n;
  }
  const std::size_t dim = train.empty() ? 0 : train.front().size();
  std::ostringstream os;
  os << "index";
  for (std::size_t k = 0; k < dim; ++k) os << ",mu_" << k + 1;
  os << ",selected,first_n\n";
  for (std::size_t i = 0; i < train.size(); ++i) {
    os << i;
    for (std::size_t k = 0; k < dim; ++k) os << ',' << num(train[i][k]);
    os << ',' << count[i] << ',' << (count[i] ? std::to_string(first[i]) : "") << '\n';
  }
  write_text(path, os.str());
}

void write_errors_csv(const fs::path& path, const std::vector<ErrorCurve>& curves) {
  std::ostringstream os;
  os << "n,error,failures,metric,basis_kind,seed\n";
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.n.size(); ++i)
      os << c.n[i] << ',' << num(c.error[i]) << ',' << c.failures[i] << ',' << to_string(c.metric) << ','
         << c.basis_kind << ',' << (c.seed ? std::to_string(*c.seed) : "") << '\n';
  write_text(path, os.str());
}

OfflineReport cmd_offline(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  const auto p = make_problem(config.problem);
  const auto train = config.train();
  const TruthSolver solver(config.truth);
  const std::string method = method_name(config.indicator);
  say(log, "offline: " + std::string(p->id()) + ", " + std::to_string(p->size()) + " unknowns, " +
               std::to_string(train.size()) + " training parameters, N = " + std::to_string(config.max_basis) +
               ", indicator " + std::string(to_string(config.indicator)));
  OfflineReport out{train_model(p, train, greedy_options(config, config.indicator), solver), config.output / "model"};
  const auto& h = out.result.history;
  say(log, "offline: " + std::to_string(out.result.model.n()) + " basis vectors, " +
               std::to_string(out.result.model.M()) + " collocation points, " + num(h.offline_seconds) + " s" +
               (h.stopped_early ? " (stopped early: " + h.stop_reason + ")" : ""));

  auto outputs = write_training(config.output, out.result, train);
  Timings t;
  double truth = 0.0, sweep = 0.0;
  std::size_t calls = 0;
  for (const auto& s : h.steps) truth += s.truth_seconds, sweep += s.sweep_seconds, calls += s.truth_invocations;
  t.add(method, "offline_seconds", h.offline_seconds);
  t.add(method, "truth_seconds_total", truth);
  t.add(method, "sweep_seconds_total", sweep);
  t.add(method, "truth_invocations", double(calls));
  write_timings_csv(config.output / "timings.csv", t.j);
  outputs.push_back("timings.csv");
  json extra = {{"stopped_early", h.stopped_early}, {"stop_reason", h.stop_reason}};
  write_manifest(config.output, "offline", config_json(config), config_hash(config), config.seed, outputs, t.j, extra);
  return out;
}

OnlineReport cmd_online(const fs::path& model_dir, const Parameter& mu, int reps, const fs::path& output,
                        const GaussNewtonOptions& reduced, std::ostream* log) {
  const ReducedModel model = ReducedModel::load(model_dir);
  const Problem& p = model.problem();
  p.check_parameter(mu);
  OnlineReport r;
  r.mu = mu;
  r.reps = reps;
  if (p.is_transient()) {
    ReducedTrajectory rt;
    r.median_seconds = median_seconds(reps, [&] { rt = solve_reduced_transient(model, mu, std::nullopt, reduced); });
    r.solution = model.basis() * rt.coefficients;
    for (int it : rt.iterations) r.iterations += it;
    const Index last = rt.last_index;
    Eigen::VectorXd prev = rt.coefficients.col(last > 0 ? last - 1 : 0);
    r.residual_norm = last > 0 ? model.reduced_residual(rt.coefficients.col(last), mu, &prev, p.time_grid().dt).norm() : 0.0;
  } else {
    Coefficients c;
    r.median_seconds = median_seconds(reps, [&] { c = solve_reduced(model, mu, nullptr, reduced); });
    r.solution = model.reconstruct(c.c);
    r.iterations = c.iterations;
    r.residual_norm = c.residual_norm;
  }
  say(log, "online: mu = " + mu.to_string() + ", median " + num(r.median_seconds) + " s over " +
               std::to_string(reps) + " runs, " + std::to_string(r.iterations) + " Gauss-Newton iterations");

  fs::create_directories(output);
  write_matrix(output / "solution.bin", r.solution);
  json meta = to_json(p.config());
  meta["mu"] = to_json(mu);
  meta["nodes"] = p.size();
  meta["n"] = model.n();
  if (p.is_transient()) meta["times"] = {{"t0", p.time_grid().t0}, {"dt", p.time_grid().dt}, {"steps", p.time_grid().steps}};
  write_text(output / "solution.json", meta.dump(2) + "\n");
  Timings t;
  t.add("online", "median_seconds", r.median_seconds);
  t.add("online", "reps", reps);
  t.add("online", "iterations", r.iterations);
  t.add("online", "residual_norm", r.residual_norm);
  write_timings_csv(output / "timings.csv", t.j);
  json cfg = {{"model", fs::absolute(model_dir).string()}, {"mu", to_json(mu)}, {"reps", reps}};
  std::string h = "0000000000000000";
  write_manifest(output, "online", cfg, h, 0, {"solution.bin", "solution.json", "timings.csv"}, t.j);
  return r;
}

CompareReport cmd_compare(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  if (config.test_mesh.empty()) throw InvalidArgument("compare: a test mesh is required");
  const auto p = make_problem(config.problem);
  const auto train = config.train();
  const auto test = config.test();
  const TruthSolver solver(config.truth);
  const bool transient = p->is_transient();
  EvaluationOptions eval;
  eval.threads = config.threads;
  eval.reduced = config.reduced;
  std::vector<std::string> outputs{"errors.csv", "timings.csv"};
  Timings t;

  say(log, "compare: truth references for " + std::to_string(test.size()) + " test parameters");
  const References refs = compute_references(*p, test, solver, config.threads);

  CompareReport out;
  std::optional<GreedyResult> l1_model;
  for (auto ind : {Indicator::l1, Indicator::residual}) {
    const std::string name = method_name(ind);
    say(log, "compare: training " + name);
    GreedyResult r = train_model(p, train, greedy_options(config, ind), solver);
    t.add(name, "offline_seconds", r.history.offline_seconds);
    for (const auto& f : write_training(config.output / name, r, train)) outputs.push_back(name + "/" + f);
    ErrorCurve c = evaluate_error(r.model, refs, eval);
    c.basis_kind = name;
    out.curves.push_back(std::move(c));
    if (ind == Indicator::l1) l1_model.emplace(std::move(r));
  }

  say(log, "compare: POD of the training snapshots");
  {
    const References snaps = compute_references(*p, train, solver, config.threads);
    std::vector<Eigen::VectorXd> cols;
    for (const auto& s : snaps.solutions) {
      if (!transient) {
        cols.push_back(s.col(0));
        continue;
      }
      for (Index k = config.pod_time_stride; k < s.cols(); k += config.pod_time_stride) cols.push_back(s.col(k));
    }
    Eigen::MatrixXd S(p->size(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) S.col(static_cast<Index>(j)) = cols[j];
    const PodBasis pod = pod_basis(S, std::min<Index>(config.max_basis, S.cols()));
    if (pod.rank_limited) say(log, "compare: warning: snapshot matrix has rank below N, POD basis truncated");
    ErrorCurve c = projection_error(pod.modes, refs, transient, config.max_basis);
    c.basis_kind = "pod";
    out.curves.push_back(std::move(c));
    t.add("pod", "snapshots", double(S.cols()));
  }

  std::vector<ErrorCurve> random;
  if (!transient && config.random_seeds > 0) {
    say(log, "compare: " + std::to_string(config.random_seeds) + " random bases");
    for (int s = 0; s < config.random_seeds; ++s) {
      const std::uint64_t seed = derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(s));
      const GreedyResult r = random_basis(p, train, config.max_basis, seed, greedy_options(config, Indicator::l1), solver);
      ErrorCurve c = evaluate_error(r.model, refs, eval);
      c.basis_kind = "rand";
      c.seed = seed;
      random.push_back(std::move(c));
    }
    CurveSummary sum = summarize(random);
    sum.best.basis_kind = "rand-best";
    sum.median.basis_kind = "rand-median";
    sum.worst.basis_kind = "rand-worst";
    out.curves.push_back(std::move(sum.best));
    out.curves.push_back(std::move(sum.median));
    out.curves.push_back(std::move(sum.worst));
  } else if (transient) {
    say(log, "compare: random baselines are steady only; skipped");
  }
  for (auto& c : random) out.curves.push_back(std::move(c));
  write_errors_csv(config.output / "errors.csv", out.curves);

  if (transient && !config.report_parameters.empty()) {
    std::ostringstream os;
    os << "basis_kind,n";
    for (std::size_t k = 0; k < p->box().dimension(); ++k) os << ",mu_" << k + 1;
    os << ",time_index,time,error\n";
    const double cell = cell_measure(p->grid());
    const std::vector<Index> ns = config.report_n.empty() ? std::vector<Index>{l1_model->model.n()} : config.report_n;
    for (const auto& mu : config.report_parameters) {
      const Trajectory tr = solver.solve_transient(*p, mu);
      for (Index n : ns) {
        if (n > l1_model->model.n()) continue;
        const ReducedModel sub = l1_model->model.truncated(n);
        try {
          const auto rt = solve_reduced_transient(sub, mu, std::nullopt, config.reduced);
          const Eigen::VectorXd e = l2_per_time(sub.basis() * rt.coefficients - tr.states, cell);
          for (Index k = 0; k < e.size(); ++k) {
            os << "l1-roc," << n;
            for (std::size_t d = 0; d < mu.size(); ++d) os << ',' << num(mu[d]);
            os << ',' << k << ',' << num(p->time_grid().time(k)) << ',' << num(e[k]) << '\n';
          }
        } catch (const ConvergenceError& err) {
          say(log, "compare: reduced solve failed at mu = " + mu.to_string() + ", n = " + std::to_string(n) + ": " + err.what());
        }
      }
    }
    write_text(config.output / "l2_time.csv", os.str());
    outputs.push_back("l2_time.csv");
  }

  write_timings_csv(config.output / "timings.csv", t.j);
  json extra = {{"random_seed_derivation", "derive_seed(seed, 1000 + replicate)"},
                {"pod_time_stride", transient ? json(config.pod_time_stride) : json(nullptr)}};
  write_manifest(config.output, "compare", config_json(config), config_hash(config), config.seed, outputs, t.j, extra);
  return out;
}

BenchReport cmd_bench(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  const auto p = make_problem(config.problem);
  const auto train = config.train();
  const auto queries = query_points(config);
  const bool transient = p->is_transient();
  BenchReport out;
  Timings t;
  std::vector<std::string> outputs{"timings.csv", "cumulative.csv"};

  {
    double sum = 0.0;
    for (const auto& mu : queries) {
      const TruthSolver solver(config.truth);
      sum += median_seconds(config.reps, [&] {
        if (transient) (void)solver.solve_transient(*p, mu);
        else (void)solver.solve_steady(*p, mu);
      });
    }
    out.truth_seconds = sum / double(queries.size());
    t.add("truth", "query_seconds", out.truth_seconds);
    say(log, "bench: truth " + num(out.truth_seconds) + " s per query");
  }

  for (auto ind : {Indicator::l1, Indicator::residual}) {
    const std::string name = method_name(ind);
    const TruthSolver solver(config.truth);
    GreedyOptions o = greedy_options(config, ind);
    o.threads = 1;
    const GreedyResult r = train_model(p, train, o, solver);
    for (const auto& f : write_training(config.output / name, r, train)) outputs.push_back(name + "/" + f);
    BenchRow row;
    row.method = name;
    row.offline_seconds = r.history.offline_seconds;
    double sum = 0.0;
    for (const auto& mu : queries) {
      sum += median_seconds(config.reps, [&] {
        if (transient) (void)solve_reduced_transient(r.model, mu, std::nullopt, config.reduced);
        else (void)solve_reduced(r.model, mu, nullptr, config.reduced);
      });
    }
    row.online_seconds = sum / double(queries.size());
    row.break_even = break_even(row.offline_seconds, out.truth_seconds, row.online_seconds);
    t.add(name, "offline_seconds", row.offline_seconds);
    t.add(name, "online_seconds", row.online_seconds);
    t.j[name]["break_even"] = row.break_even ? json(double(*row.break_even)) : json(nullptr);
    say(log, "bench: " + name + " offline " + num(row.offline_seconds) + " s, online " + num(row.online_seconds) +
                 " s, break-even " + (row.break_even ? std::to_string(*row.break_even) : "never"));
    out.rows.push_back(std::move(row));
  }

  long Q = config.max_queries;
  if (Q <= 0) {
    Q = 10;
    for (const auto& r : out.rows)
      if (r.break_even) Q = std::max(Q, 2 * *r.break_even);
  }
  std::ostringstream os;
  os << "queries,truth";
  for (const auto& r : out.rows) os << ',' << r.method;
  os << '\n';
  for (long q = 0; q <= Q; ++q) {
    os << q << ',' << num(double(q) * out.truth_seconds);
    for (const auto& r : out.rows) os << ',' << num(r.offline_seconds + double(q) * r.online_seconds);
    os << '\n';
  }
  write_text(config.output / "cumulative.csv", os.str());
  write_timings_csv(config.output / "timings.csv", t.j);
  json qs = json::array();
  for (const auto& mu : queries) qs.push_back(to_json(mu));
  write_manifest(config.output, "bench", config_json(config), config_hash(config), config.seed, outputs, t.j,
                 {{"queries", qs}});
  return out;
}

std::string list_problems() {
  std::ostringstream os;
  for (auto kind : all_problem_kinds()) {
    ProblemConfig c;
    c.kind = kind;
    c = resolved(c);
    os << std::left << std::setw(22) << to_string(kind) << ' ' << (c.box->dimension()) << "  K=" << std::setw(4) << c.K
       << ' ' << describe(kind) << '\n';
  }
  return os.str();
}

}  // namespace l1roc
