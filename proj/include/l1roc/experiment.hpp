#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "l1roc/baselines.hpp"

namespace l1roc {

/// One experiment as read from a JSON config file (schema in docs/formats.md).
struct ExperimentConfig {
  ProblemConfig problem;
  std::vector<std::string> train_mesh;  // one axis spec per parameter component
  std::vector<std::string> test_mesh;
  bool require_disjoint = false;
  Index max_basis = 10;
  Indicator indicator = Indicator::l1;
  L1Coordinates l1_coordinates = L1Coordinates::snapshot;
  TruthOptions truth;
  GaussNewtonOptions reduced;
  std::uint64_t seed = 0;
  int threads = 1;
  int reps = 5;
  std::filesystem::path output = "out";

  int random_seeds = 15;
  Index pod_time_stride = 10;

  std::vector<Parameter> queries;  // bench/online timing points; empty: first test parameter
  Index max_queries = 0;           // length of the cumulative-cost table; 0 picks one from the break-even

  std::vector<Parameter> report_parameters;  // per-time L2 curves (time-dependent problems)
  std::vector<Index> report_n;

  std::vector<Parameter> train() const;
  std::vector<Parameter> test() const;
  /// Throws InvalidArgument on anything inconsistent, including overlapping
  /// training and test sets when `require_disjoint` is set.
  void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON of the config with every default spelled out.
std::string to_json_text(const ExperimentConfig& config);
/// FNV-1a 64 of to_json_text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Median wall time of `reps` calls, after one untimed warm-up call.
template <typename Fn>
double median_seconds(int reps, Fn&& fn);

struct OfflineReport {
  GreedyResult result;
  std::filesystem::path model_dir;
};

struct OnlineReport {
  Parameter mu;
  Eigen::MatrixXd solution;  // one column, or one per time level
  double median_seconds = 0.0;
  int reps = 0;
  int iterations = 0;
  double residual_norm = 0.0;
};

struct CompareReport {
  std::vector<ErrorCurve> curves;  // l1-roc, res-roc, pod, rand-best/median/worst, then each random seed
};

struct BenchRow {
  std::string method;  // l1-roc or res-roc
  double offline_seconds = 0.0;
  double online_seconds = 0.0;
  std::optional<long> break_even;
};

struct BenchReport {
  double truth_seconds = 0.0;
  std::vector<BenchRow> rows;
};

/// floor(offline / (truth - online)) + 1, the first query count at which the
/// reduced model has paid for itself; nullopt if online is not faster.
std::optional<long> break_even(double offline_seconds, double truth_seconds, double online_seconds);

/// Each command writes its files plus manifest.json into config.output.
/// `log`, when given, receives one progress line per phase.
OfflineReport cmd_offline(const ExperimentConfig& config, std::ostream* log = nullptr);
OnlineReport cmd_online(const std::filesystem::path& model_dir, const Parameter& mu, int reps,
                        const std::filesystem::path& output, const GaussNewtonOptions& reduced = {},
                        std::ostream* log = nullptr);
CompareReport cmd_compare(const ExperimentConfig& config, std::ostream* log = nullptr);
BenchReport cmd_bench(const ExperimentConfig& config, std::ostream* log = nullptr);
/// Lines of "id  dim  box  summary".
std::string list_problems();

/// CSV writers used by the commands (columns documented in docs/formats.md).
void write_history_csv(const std::filesystem::path& path, const GreedyHistory& history, const Problem& problem);
void write_collocation_csv(const std::filesystem::path& path, const ReducedModel& model);
void write_params_csv(const std::filesystem::path& path, const std::vector<Parameter>& train,
                      const GreedyHistory& history);
void write_errors_csv(const std::filesystem::path& path, const std::vector<ErrorCurve>& curves);

}  // namespace l1roc

#include "l1roc/detail/timing.hpp"
