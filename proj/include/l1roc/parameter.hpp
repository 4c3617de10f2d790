#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace l1roc {

/// A point in parameter space. All shipped problems use one or two components.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::initializer_list<double> values) : values_(values) {}
  explicit Parameter(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const Parameter&, const Parameter&) = default;

  std::string to_string() const;

 private:
  std::vector<double> values_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Axis-aligned parameter domain.
class ParameterBox {
 public:
  ParameterBox() = default;
  explicit ParameterBox(std::vector<Interval> bounds);

  std::size_t dimension() const noexcept { return bounds_.size(); }
  const Interval& operator[](std::size_t i) const { return bounds_[i]; }
  const std::vector<Interval>& bounds() const noexcept { return bounds_; }

  /// Inclusive, with a relative slack of 1e-12 of the box width so that mesh
  /// endpoints produced by floating point stepping still count as inside.
  bool contains(const Parameter& mu) const;

  friend bool operator==(const ParameterBox&, const ParameterBox&) = default;

 private:
  std::vector<Interval> bounds_;
};

/// Parses one axis of a parameter mesh. Accepted forms:
///   "a:h:b"         equidistant points a, a+h, ... up to b
///   "log:a:b:n"     n logarithmically spaced points from a to b
///   "logmid:a:b:n"  the n-1 geometric midpoints of "log:a:b:n"
///   "lin:a:b:n"     n equidistant points from a to b
///   "v1,v2,..."     an explicit list
std::vector<double> parse_axis(std::string_view spec);

/// Tensor product of the axes; the first axis varies slowest.
std::vector<Parameter> tensor_mesh(const std::vector<std::vector<double>>& axes);

std::vector<Parameter> parse_mesh(const std::vector<std::string>& axis_specs);

}  // namespace l1roc
