#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "l1roc/errors.hpp"
#include "l1roc/experiment.hpp"
#include "l1roc/matrix_io.hpp"

namespace py = pybind11;
using namespace l1roc;

namespace {

Parameter to_param(const std::vector<double>& v) { return Parameter(v); }

ProblemConfig problem_config(const std::string& id, Index K, std::optional<std::string> setup,
                             std::optional<double> final_time, std::optional<double> time_step) {
  ProblemConfig c;
  c.kind = parse_problem_kind(id);
  c.K = K;
  if (setup) {
    if (*setup == "a" || *setup == "A") c.burgers_setup = BurgersSetup::a;
    else if (*setup == "b" || *setup == "B") c.burgers_setup = BurgersSetup::b;
    else throw InvalidArgument("burgers_setup must be 'a' or 'b'");
  }
  c.final_time = final_time;
  c.time_step = time_step;
  return c;
}

py::dict history_dict(const GreedyHistory& h) {
  py::list steps;
  for (const auto& s : h.steps) {
    py::dict d;
    d["n"] = s.n;
    d["parameter_index"] = s.parameter_index;
    d["mu"] = s.mu.values();
    d["time_index"] = s.time_index;
    d["multiplicity"] = s.multiplicity;
    d["indicator"] = s.indicator;
    d["indicators"] = s.indicators;
    d["solution_point"] = s.solution_point;
    d["residual_point"] = s.residual_point;
    d["truth_seconds"] = s.truth_seconds;
    d["sweep_seconds"] = s.sweep_seconds;
    d["truth_invocations"] = s.truth_invocations;
    d["sweep_failures"] = s.sweep_failures;
    steps.append(d);
  }
  py::dict out;
  out["indicator"] = std::string(to_string(h.indicator));
  out["steps"] = steps;
  out["stopped_early"] = h.stopped_early;
  out["stop_reason"] = h.stop_reason;
  out["offline_seconds"] = h.offline_seconds;
  return out;
}

py::dict curve_dict(const ErrorCurve& c) {
  py::dict d;
  d["basis_kind"] = c.basis_kind;
  d["metric"] = std::string(to_string(c.metric));
  d["n"] = c.n;
  d["error"] = c.error;
  d["failures"] = c.failures;
  d["seed"] = c.seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reduced over-collocation models for parametrized nonlinear PDEs";
  m.attr("__version__") = L1ROC_VERSION;

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConvergenceError& e) {
      PyErr_SetString(PyExc_ArithmeticError, e.what());
    }
  });

  m.def("problem_ids", [] {
    std::vector<std::string> ids;
    for (auto k : all_problem_kinds()) ids.emplace_back(to_string(k));
    return ids;
  });
  m.def("list_problems", &list_problems);
  m.def("parse_mesh", [](const std::vector<std::string>& axes) {
    std::vector<std::vector<double>> out;
    for (const auto& p : parse_mesh(axes)) out.push_back(p.values());
    return out;
  });

  py::class_<Problem, std::shared_ptr<Problem>>(m, "Problem")
      .def_property_readonly("id", [](const Problem& p) { return std::string(p.id()); })
      .def_property_readonly("size", &Problem::size)
      .def_property_readonly("transient", &Problem::is_transient)
      .def_property_readonly("box", [](const Problem& p) {
        std::vector<std::pair<double, double>> b;
        for (const auto& iv : p.box().bounds()) b.emplace_back(iv.lo, iv.hi);
        return b;
      })
      .def_property_readonly("coordinates", [](const Problem& p) { return p.grid().coordinates(); })
      .def_property_readonly("times", [](const Problem& p) {
        const auto& t = p.time_grid();
        Eigen::VectorXd v(t.steps + 1);
        for (Index k = 0; k <= t.steps; ++k) v[k] = t.time(k);
        return v;
      })
      .def("residual", [](const Problem& p, const Eigen::VectorXd& u, const std::vector<double>& mu) {
        return p.residual_full(u, to_param(mu));
      });

  m.def(
      "make_problem",
      [](const std::string& id, Index K, std::optional<std::string> setup, std::optional<double> final_time,
         std::optional<double> time_step) {
        return std::const_pointer_cast<Problem>(make_problem(problem_config(id, K, setup, final_time, time_step)));
      },
      py::arg("id"), py::arg("K") = 0, py::arg("burgers_setup") = py::none(), py::arg("final_time") = py::none(),
      py::arg("time_step") = py::none());

  m.def(
      "solve_truth",
      [](const Problem& p, const std::vector<double>& mu) -> Eigen::MatrixXd {
        const TruthSolver solver;
        if (p.is_transient()) return solver.solve_transient(p, to_param(mu)).states;
        return solver.solve_steady(p, to_param(mu)).u;
      },
      py::arg("problem"), py::arg("mu"), py::call_guard<py::gil_scoped_release>());

  py::class_<ReducedModel>(m, "ReducedModel")
      .def_property_readonly("n", &ReducedModel::n)
      .def_property_readonly("M", &ReducedModel::M)
      .def_property_readonly("basis", &ReducedModel::basis)
      .def_property_readonly("solution_points", [](const ReducedModel& r) { return r.collocation().solution_points; })
      .def_property_readonly("residual_points", [](const ReducedModel& r) { return r.collocation().residual_points; })
      .def_property_readonly("parameters", [](const ReducedModel& r) {
        std::vector<std::vector<double>> out;
        for (const auto& p : r.parameters) out.push_back(p.values());
        return out;
      })
      .def_readonly("time_indices", &ReducedModel::time_indices)
      .def("truncated", &ReducedModel::truncated)
      .def(
          "solve",
          [](const ReducedModel& r, const std::vector<double>& mu) -> Eigen::MatrixXd {
            if (r.problem().is_transient()) return r.basis() * solve_reduced_transient(r, to_param(mu)).coefficients;
            return r.reconstruct(solve_reduced(r, to_param(mu)).c);
          },
          py::arg("mu"), py::call_guard<py::gil_scoped_release>())
      .def("coefficients",
           [](const ReducedModel& r, const std::vector<double>& mu) -> Eigen::MatrixXd {
             if (r.problem().is_transient()) return solve_reduced_transient(r, to_param(mu)).coefficients;
             return solve_reduced(r, to_param(mu)).c;
           })
      .def("save", &ReducedModel::save)
      .def_static("load", &ReducedModel::load);

  m.def(
      "train",
      [](const std::shared_ptr<Problem>& p, const std::vector<std::vector<double>>& train, Index N,
         const std::string& indicator, std::uint64_t seed, int threads) {
        std::vector<Parameter> ps;
        for (const auto& v : train) ps.push_back(to_param(v));
        GreedyOptions o;
        o.max_basis = N;
        o.indicator = parse_indicator(indicator);
        o.seed = seed;
        o.threads = threads;
        py::gil_scoped_release release;
        GreedyResult r = p->is_transient() ? greedy_transient(p, ps, o) : greedy_steady(p, ps, o);
        py::gil_scoped_acquire acquire;
        return py::make_tuple(std::move(r.model), history_dict(r.history));
      },
      py::arg("problem"), py::arg("train"), py::arg("N"), py::arg("indicator") = "l1", py::arg("seed") = 0,
      py::arg("threads") = 1);

  m.def("read_matrix", &read_matrix);
  m.def("write_matrix", &write_matrix);

  m.def(
      "offline",
      [](const std::string& config_json, const std::filesystem::path& out) {
        auto c = parse_config(config_json);
        c.output = out;
        const auto r = cmd_offline(c);
        return py::make_tuple(r.result.model, history_dict(r.result.history));
      },
      py::arg("config_json"), py::arg("out"));
  m.def(
      "compare",
      [](const std::string& config_json, const std::filesystem::path& out) {
        auto c = parse_config(config_json);
        c.output = out;
        py::list curves;
        for (const auto& cv : cmd_compare(c).curves) curves.append(curve_dict(cv));
        return curves;
      },
      py::arg("config_json"), py::arg("out"));
  m.def(
      "bench",
      [](const std::string& config_json, const std::filesystem::path& out) {
        auto c = parse_config(config_json);
        c.output = out;
        const auto r = cmd_bench(c);
        py::dict d;
        d["truth_seconds"] = r.truth_seconds;
        py::list rows;
        for (const auto& row : r.rows) {
          py::dict x;
          x["method"] = row.method;
          x["offline_seconds"] = row.offline_seconds;
          x["online_seconds"] = row.online_seconds;
          x["break_even"] = row.break_even;
          rows.append(x);
        }
        d["rows"] = rows;
        return d;
      },
      py::arg("config_json"), py::arg("out"));
}
