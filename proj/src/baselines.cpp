#include "l1roc/baselines.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "l1roc/errors.hpp"
#include "l1roc/parallel.hpp"

namespace l1roc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Index curve_length(Index available, Index max_n) { return max_n > 0 ? std::min(available, max_n) : available; }

}  // namespace

PodBasis pod_basis(const Eigen::MatrixXd& snapshots, Index N, double rank_tolerance) {
  if (snapshots.cols() == 0 || snapshots.rows() == 0) throw InvalidArgument("pod_basis: empty snapshot matrix");
  if (N < 1) throw InvalidArgument("pod_basis: N must be positive");
  if (N > snapshots.cols()) throw InvalidArgument("pod_basis: N exceeds the number of snapshots");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(snapshots, Eigen::ComputeThinU);
  PodBasis out;
  out.singular_values = svd.singularValues();
  const double top = out.singular_values.size() ? out.singular_values[0] : 0.0;
  Index rank = 0;
  while (rank < out.singular_values.size() && out.singular_values[rank] > rank_tolerance * top) ++rank;
  const Index keep = std::min(N, rank);
  out.rank_limited = keep < N;
  out.modes = svd.matrixU().leftCols(keep);
  return out;
}

std::vector<std::size_t> random_selection(std::size_t train_size, Index N, std::uint64_t seed) {
  if (N < 1 || static_cast<std::size_t>(N) > train_size)
    throw InvalidArgument("random_selection: need 1 <= N <= training set size");
  std::vector<std::size_t> idx(train_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates so the draw only depends on (train_size, seed)
  for (std::size_t i = 0; i < static_cast<std::size_t>(N); ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, train_size - 1)(rng);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(N));
  return idx;
}

GreedyResult random_basis(std::shared_ptr<const Problem> problem, const std::vector<Parameter>& train, Index N,
                          std::uint64_t seed, const GreedyOptions& options, const TruthSolver& solver) {
  GreedyOptions opt = options;
  opt.max_basis = N;
  opt.fixed_sequence = random_selection(train.size(), N, seed);
  return greedy_steady(std::move(problem), train, opt, solver);
}

std::string_view to_string(ErrorMetric metric) {
  switch (metric) {
    case ErrorMetric::linf_relative: return "linf-relative";
    case ErrorMetric::frobenius_relative: return "frobenius-relative";
    case ErrorMetric::l2_per_time: return "l2-per-time";
  }
  return "unknown";
}

References compute_references(const Problem& problem, const std::vector<Parameter>& test, const TruthSolver& solver,
                              int threads) {
  References refs;
  refs.parameters = test;
  refs.solutions.resize(test.size());
  parallel_for(test.size(), threads, [&](std::size_t i) {
    if (problem.is_transient()) refs.solutions[i] = solver.solve_transient(problem, test[i]).states;
    else refs.solutions[i] = solver.solve_steady(problem, test[i]).u;
  });
  return refs;
}

double linf_relative(const std::vector<Eigen::VectorXd>& errors, const std::vector<Eigen::VectorXd>& truths) {
  if (errors.empty() || errors.size() != truths.size()) throw InvalidArgument("linf_relative: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    num = std::max(num, errors[i].lpNorm<Eigen::Infinity>());
    den = std::max(den, truths[i].lpNorm<Eigen::Infinity>());
  }
  if (!(den > 0.0)) throw InvalidArgument("linf_relative: truth is identically zero");
  return num / den;
}

double frobenius_relative(const Eigen::MatrixXd& error, const Eigen::MatrixXd& truth) {
  if (error.rows() != truth.rows() || error.cols() != truth.cols())
    throw InvalidArgument("frobenius_relative: shape mismatch");
  const double den = truth.norm();
  if (!(den > 0.0)) throw InvalidArgument("frobenius_relative: truth is identically zero");
  return error.norm() / den;
}

Eigen::VectorXd l2_per_time(const Eigen::MatrixXd& error, double cell) {
  if (!(cell > 0.0)) throw InvalidArgument("l2_per_time: cell measure must be positive");
  return (cell * error.colwise().squaredNorm().transpose()).cwiseSqrt();
}

ErrorCurve evaluate_error(const ReducedModel& model, const References& refs, const EvaluationOptions& options) {
  const Problem& p = model.problem();
  const bool transient = p.is_transient();
  if (refs.parameters.empty()) throw InvalidArgument("evaluate_error: empty test set");
  ErrorCurve curve;
  curve.metric = transient ? ErrorMetric::frobenius_relative : ErrorMetric::linf_relative;
  const Index N = curve_length(model.n(), options.max_n);
  const std::size_t m = refs.parameters.size();
  for (Index n = 1; n <= N; ++n) {
    const ReducedModel sub = model.truncated(n);
    std::vector<double> err(m, kNaN), scale(m, kNaN);
    std::atomic<std::size_t> failures{0};
    parallel_for(m, options.threads, [&](std::size_t i) {
      const Eigen::MatrixXd& truth = refs.solutions[i];
      try {
        if (transient) {
          const auto rt = solve_reduced_transient(sub, refs.parameters[i], std::nullopt, options.reduced);
          const Eigen::MatrixXd approx = sub.basis() * rt.coefficients;
          err[i] = frobenius_relative(approx - truth, truth);
        } else {
          const auto c = solve_reduced(sub, refs.parameters[i], nullptr, options.reduced);
          err[i] = (sub.reconstruct(c.c) - truth.col(0)).lpNorm<Eigen::Infinity>();
        }
      } catch (const ConvergenceError&) {
        ++failures;
      }
      scale[i] = truth.lpNorm<Eigen::Infinity>();
    });
    double value = kNaN;
    if (transient) {
      double sum = 0.0;
      std::size_t count = 0;
      for (double e : err)
        if (!std::isnan(e)) sum += e, ++count;
      if (count) value = sum / double(count);
    } else {
      double num = -1.0;
      for (double e : err)
        if (!std::isnan(e)) num = std::max(num, e);
      if (num >= 0.0) value = num / *std::max_element(scale.begin(), scale.end());
    }
    curve.n.push_back(n);
    curve.error.push_back(value);
    curve.failures.push_back(failures.load());
  }
  return curve;
}

ErrorCurve projection_error(const Eigen::MatrixXd& basis, const References& refs, bool transient, Index max_n) {
  if (basis.cols() == 0) throw InvalidArgument("projection_error: empty basis");
  if (refs.parameters.empty()) throw InvalidArgument("projection_error: empty test set");
  // Q from an unpivoted QR: its first n columns span the first n basis columns
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(basis.rows(), basis.cols());
  ErrorCurve curve;
  curve.metric = transient ? ErrorMetric::frobenius_relative : ErrorMetric::linf_relative;
  const Index N = curve_length(basis.cols(), max_n);
  double den = 0.0;
  for (const auto& u : refs.solutions) den = std::max(den, u.lpNorm<Eigen::Infinity>());
  for (Index n = 1; n <= N; ++n) {
    const auto Qn = Q.leftCols(n);
    double value = 0.0;
    for (const auto& u : refs.solutions) {
      const Eigen::MatrixXd e = u - Qn * (Qn.transpose() * u);
      if (transient) value += frobenius_relative(e, u);
      else value = std::max(value, e.lpNorm<Eigen::Infinity>());
    }
    value = transient ? value / double(refs.solutions.size()) : value / den;
    curve.n.push_back(n);
    curve.error.push_back(value);
    curve.failures.push_back(0);
  }
  return curve;
}

CurveSummary summarize(const std::vector<ErrorCurve>& curves) {
  if (curves.empty()) throw InvalidArgument("summarize: no curves");
  CurveSummary s;
  Index N = 0;
  for (const auto& c : curves) N = std::max<Index>(N, static_cast<Index>(c.n.size()));
  for (ErrorCurve* out : {&s.best, &s.median, &s.worst}) out->metric = curves.front().metric;
  for (Index k = 0; k < N; ++k) {
    std::vector<double> v;
    std::size_t missing = 0;
    for (const auto& c : curves) {
      if (k < static_cast<Index>(c.error.size()) && !std::isnan(c.error[static_cast<std::size_t>(k)]))
        v.push_back(c.error[static_cast<std::size_t>(k)]);
      else ++missing;
    }
    std::sort(v.begin(), v.end());
    double best = kNaN, med = kNaN, worst = kNaN;
    if (!v.empty()) {
      best = v.front();
      worst = v.back();
      const std::size_t h = v.size() / 2;
      med = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    }
    for (auto [out, value] : {std::pair{&s.best, best}, std::pair{&s.median, med}, std::pair{&s.worst, worst}}) {
      out->n.push_back(k + 1);
      out->error.push_back(value);
      out->failures.push_back(missing);
    }
  }
  return s;
}

LogLinearFit log_linear_fit(const ErrorCurve& curve) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < curve.n.size(); ++i) {
    const double e = curve.error[i];
    if (std::isnan(e) || !(e > 0.0)) continue;
    x.push_back(double(curve.n[i]));
    y.push_back(std::log(e));
  }
  LogLinearFit fit;
  fit.points = x.size();
  if (x.size() < 2) return fit;
  const double k = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace l1roc
