#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "l1roc/errors.hpp"
#include "l1roc/experiment.hpp"
#include "l1roc/matrix_io.hpp"

using namespace l1roc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("l1roc_test_experiment_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::string> out;
  for (std::string s; std::getline(is, s);) out.push_back(s);
  return out;
}

std::size_t fields(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

const char* kBurgers = R"({
  "problem": "steady-burgers", "K": 40,
  "train": ["log:0.05:1:12"], "test": ["logmid:0.05:1:6"], "disjoint": true,
  "N": 4, "seed": 3, "reps": 1,
  "compare": {"random_seeds": 3}
})";

}  // namespace

TEST_CASE("config defaults and overrides") {
  const auto c = parse_config(R"({"problem": "cubic-rd", "train": ["lin:0.2:5:4", "lin:0.2:2:3"]})");
  CHECK(c.problem.kind == ProblemKind::cubic_rd);
  CHECK(c.max_basis == 10);
  CHECK(c.indicator == Indicator::l1);
  CHECK(c.reps == 5);
  CHECK(c.threads == 1);
  CHECK(c.random_seeds == 15);
  CHECK(c.train().size() == 12);
  CHECK(c.test_mesh.empty());

  const auto d = parse_config(kBurgers);
  CHECK(d.problem.K == 40);
  CHECK(d.max_basis == 4);
  CHECK(d.seed == 3);
  CHECK(d.test().size() == 5);
  CHECK(d.random_seeds == 3);
}

TEST_CASE("config rejects bad input") {
  CHECK_THROWS_AS(parse_config("{"), FormatError);
  CHECK_THROWS_AS(parse_config("[]"), FormatError);
  CHECK_THROWS_AS(parse_config(R"({"problem": "steady-burgers", "train": ["0.1,0.2"], "nope": 1})"), FormatError);
  CHECK_THROWS_AS(parse_config(R"({"problem": "steady-burgers"})"), FormatError);
  CHECK_THROWS_AS(parse_config(R"({"problem": "steady-burgers", "train": ["0.1,0.2"], "N": 3})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"problem": "steady-burgers", "train": ["0.1,2"], "N": 1})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"problem": "cubic-rd", "train": ["lin:0.2:5:4"]})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"problem": "steady-burgers", "train": ["0.1,0.2"], "N": 1, "indicator": "l2"})"),
                  InvalidArgument);
}

TEST_CASE("disjointness check") {
  const std::string base = R"({"problem": "steady-burgers", "train": ["0.1,0.2,0.3"], "N": 1, "test": ["0.25,0.3"])";
  CHECK_NOTHROW(parse_config(base + "}"));
  CHECK_THROWS_AS(parse_config(base + R"(, "disjoint": true})"), InvalidArgument);
  CHECK_NOTHROW(parse_config(R"({"problem": "steady-burgers", "train": ["0.1,0.2"], "N": 1, "test": ["0.15"], "disjoint": true})"));
}

TEST_CASE("config hash is canonical") {
  const auto a = parse_config(kBurgers);
  auto b = parse_config(kBurgers);
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.seed = 4;
  CHECK(config_hash(a) != config_hash(b));
  // the canonical text parses back to the same config
  CHECK(config_hash(parse_config(to_json_text(a))) == config_hash(a));
}

TEST_CASE("break-even count") {
  CHECK(break_even(10.0, 1.0, 0.5) == 21);
  CHECK(break_even(9.9, 1.0, 0.5) == 20);
  CHECK(break_even(0.0, 1.0, 0.5) == 1);
  CHECK_FALSE(break_even(10.0, 1.0, 1.0).has_value());
  CHECK_FALSE(break_even(10.0, 1.0, 2.0).has_value());
  CHECK_THROWS_AS(break_even(-1.0, 1.0, 0.5), InvalidArgument);
}

TEST_CASE("median timing") {
  int calls = 0;
  const double t = median_seconds(4, [&] { ++calls; });
  CHECK(calls == 5);
  CHECK(t >= 0.0);
  CHECK_THROWS(median_seconds(0, [] {}));
}

TEST_CASE("offline and online commands") {
  auto c = parse_config(kBurgers);
  c.output = scratch("offline");
  const auto off = cmd_offline(c);
  CHECK(off.result.model.n() == 4);
  for (const char* f : {"history.csv", "collocation.csv", "params.csv", "timings.csv", "manifest.json", "model/model.json",
                        "model/basis.bin"})
    CHECK_MESSAGE(fs::exists(c.output / f), f);

  const auto hist = lines(c.output / "history.csv");
  REQUIRE(hist.size() == 5);
  for (const auto& l : hist) CHECK(fields(l) == fields(hist[0]));
  const auto col = lines(c.output / "collocation.csv");
  CHECK(col.size() == 1 + 4 + 3);
  const auto params = lines(c.output / "params.csv");
  CHECK(params.size() == 13);
  int selected = 0;
  for (std::size_t i = 1; i < params.size(); ++i) {
    std::stringstream ss(params[i]);
    std::string cell;
    std::vector<std::string> v;
    while (std::getline(ss, cell, ',')) v.push_back(cell);
    selected += std::stoi(v.at(2));
  }
  CHECK(selected == 4);

  const Parameter mu{0.3};
  const auto on = cmd_online(c.output / "model", mu, 2, c.output / "online");
  const auto direct = solve_reduced(off.result.model, mu);
  const Eigen::MatrixXd read = read_matrix(c.output / "online" / "solution.bin");
  REQUIRE(read.rows() == 40);
  REQUIRE(read.cols() == 1);
  CHECK((read.col(0) - off.result.model.reconstruct(direct.c)).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((on.solution - read).norm() == 0.0);
  CHECK_THROWS_AS(cmd_online(c.output / "model", Parameter{2.0}, 1, c.output / "bad"), DomainError);
  fs::remove_all(c.output);
}

TEST_CASE("compare command writes every curve") {
  auto c = parse_config(kBurgers);
  c.output = scratch("compare");
  const auto r = cmd_compare(c);
  // l1, residual, pod, three summaries, three seeds
  REQUIRE(r.curves.size() == 9);
  CHECK(r.curves[0].basis_kind == "l1-roc");
  CHECK(r.curves[1].basis_kind == "res-roc");
  CHECK(r.curves[2].basis_kind == "pod");
  CHECK(r.curves[3].basis_kind == "rand-best");
  for (std::size_t k = 6; k < 9; ++k) CHECK(r.curves[k].seed.has_value());
  CHECK(*r.curves[6].seed != *r.curves[7].seed);
  const auto rows = lines(c.output / "errors.csv");
  CHECK(rows.size() == 1 + 9 * 4);
  for (std::size_t n = 0; n < 4; ++n) {
    CHECK(r.curves[3].error[n] <= r.curves[4].error[n]);
    CHECK(r.curves[4].error[n] <= r.curves[5].error[n]);
  }
  CHECK(fs::exists(c.output / "l1-roc" / "model" / "basis.bin"));
  CHECK(fs::exists(c.output / "res-roc" / "history.csv"));
  fs::remove_all(c.output);
}

TEST_CASE("transient compare writes per-time errors") {
  auto c = parse_config(R"({
    "problem": "transient-burgers", "burgers_setup": "a", "K": 40, "final_time": 0.2, "time_step": 0.01,
    "train": ["lin:0.1:1:4"], "test": ["0.3"], "N": 3,
    "compare": {"pod_time_stride": 5},
    "report": {"parameters": [[0.3]], "n": [1, 3]}
  })");
  c.output = scratch("transient");
  const auto r = cmd_compare(c);
  REQUIRE(r.curves.size() == 3);
  CHECK(r.curves[0].metric == ErrorMetric::frobenius_relative);
  const auto rows = lines(c.output / "l2_time.csv");
  // header plus 21 time levels for each reported n
  CHECK(rows.size() == 1 + 2 * 21);
  CHECK(rows[1].rfind("l1-roc,1,0.3,0,0,", 0) == 0);
  fs::remove_all(c.output);
}

TEST_CASE("bench command") {
  auto c = parse_config(kBurgers);
  c.output = scratch("bench");
  c.max_queries = 7;
  const auto r = cmd_bench(c);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.truth_seconds > 0.0);
  for (const auto& row : r.rows) {
    CHECK(row.offline_seconds > 0.0);
    CHECK(row.break_even == break_even(row.offline_seconds, r.truth_seconds, row.online_seconds));
  }
  const auto cum = lines(c.output / "cumulative.csv");
  CHECK(cum.size() == 1 + 8);
  CHECK(cum[0] == "queries,truth,l1-roc,res-roc");
  fs::remove_all(c.output);
}

TEST_CASE("problem listing") {
  const auto s = list_problems();
  for (auto k : all_problem_kinds()) CHECK(s.find(std::string(to_string(k))) != std::string::npos);
}
