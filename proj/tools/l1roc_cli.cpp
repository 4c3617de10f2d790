#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "l1roc/errors.hpp"
#include "l1roc/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> reps;
  std::optional<std::string> indicator;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--reps", o.reps, "timing repetitions")->check(CLI::PositiveNumber);
  cmd->add_option("--indicator", o.indicator, "greedy error indicator")->check(CLI::IsMember({"l1", "residual"}));
  cmd->add_option("--threads", o.threads, "worker threads for training sweeps")->check(CLI::PositiveNumber);
}

l1roc::ExperimentConfig load(const Overrides& o) {
  auto c = l1roc::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output = *o.out;
  if (o.reps) c.reps = *o.reps;
  if (o.indicator) c.indicator = l1roc::parse_indicator(*o.indicator);
  if (o.threads) c.threads = *o.threads;
  c.validate();
  return c;
}

l1roc::Parameter parse_mu(const std::string& s) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const auto item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw l1roc::InvalidArgument("--mu: cannot parse '" + item + "'");
    v.push_back(x);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return l1roc::Parameter(std::move(v));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced over-collocation models for parametrized nonlinear PDEs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", L1ROC_VERSION);

  Overrides off, cmp, bch;
  auto* offline = app.add_subcommand("offline", "train a reduced model by the greedy algorithm");
  add_common(offline, off);
  auto* compare = app.add_subcommand("compare", "error curves of L1, residual, POD and random bases on the test set");
  add_common(compare, cmp);
  auto* bench = app.add_subcommand("bench", "offline, online and truth timings and break-even query counts");
  add_common(bench, bch);

  auto* online = app.add_subcommand("online", "solve a trained reduced model at one parameter");
  std::string model_dir, mu_text, online_out = "out/online";
  int online_reps = 5;
  std::optional<int> online_threads;
  online->add_option("--model", model_dir, "model directory written by 'offline'")->required()->check(CLI::ExistingDirectory);
  online->add_option("--mu", mu_text, "parameter, comma separated")->required();
  online->add_option("--out", online_out, "output directory");
  online->add_option("--reps", online_reps, "timing repetitions")->check(CLI::PositiveNumber);
  online->add_option("--threads", online_threads, "accepted for symmetry; the online solve is sequential");

  auto* list = app.add_subcommand("list-problems", "list the available problems");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*offline) {
      const auto c = load(off);
      const auto r = l1roc::cmd_offline(c, &std::cerr);
      std::cout << "model written to " << r.model_dir.string() << '\n';
    } else if (*online) {
      const auto r = l1roc::cmd_online(model_dir, parse_mu(mu_text), online_reps, online_out, {}, &std::cerr);
      std::cout << "solution written to " << (std::filesystem::path(online_out) / "solution.bin").string() << '\n';
      (void)r;
    } else if (*compare) {
      const auto c = load(cmp);
      const auto r = l1roc::cmd_compare(c, &std::cerr);
      for (const auto& curve : r.curves) {
        if (curve.seed) continue;
        std::cout << curve.basis_kind;
        for (double e : curve.error) std::cout << ' ' << e;
        std::cout << '\n';
      }
    } else if (*bench) {
      const auto c = load(bch);
      const auto r = l1roc::cmd_bench(c, &std::cerr);
      std::cout << "truth " << r.truth_seconds << " s/query\n";
      for (const auto& row : r.rows) {
        std::cout << row.method << " offline " << row.offline_seconds << " s, online " << row.online_seconds
                  << " s/query, break-even ";
        if (row.break_even) std::cout << *row.break_even << '\n';
        else std::cout << "never\n";
      }
    } else if (*list) {
      std::cout << l1roc::list_problems();
    }
  } catch (const l1roc::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const l1roc::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const l1roc::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
