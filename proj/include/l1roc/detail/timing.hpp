#pragma once

#include <algorithm>
#include <chrono>
#include <vector>

#include "l1roc/errors.hpp"

namespace l1roc {

template <typename Fn>
double median_seconds(int reps, Fn&& fn) {
  if (reps < 1) throw InvalidArgument("timing: reps must be positive");
  using Clock = std::chrono::steady_clock;
  fn();
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto start = Clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(Clock::now() - start).count());
  }
  std::sort(t.begin(), t.end());
  const std::size_t h = t.size() / 2;
  return t.size() % 2 ? t[h] : 0.5 * (t[h - 1] + t[h]);
}

}  // namespace l1roc
