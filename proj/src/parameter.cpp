#include "l1roc/parameter.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "l1roc/errors.hpp"

namespace l1roc {

std::string Parameter::to_string() const {
  std::string s = "(";
  char buf[32];
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (i > 0) s += ", ";
    s.append(buf, std::to_chars(buf, buf + sizeof buf, values_[i]).ptr);
  }
  return s + ')';
}

ParameterBox::ParameterBox(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {
  for (const auto& b : bounds_) {
    if (!(b.lo <= b.hi)) throw InvalidArgument("parameter box: lower bound exceeds upper bound");
  }
}

bool ParameterBox::contains(const Parameter& mu) const {
  if (mu.size() != bounds_.size()) return false;
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const double slack = 1e-12 * std::max(1.0, bounds_[i].width());
    if (!std::isfinite(mu[i]) || mu[i] < bounds_[i].lo - slack || mu[i] > bounds_[i].hi + slack)
      return false;
  }
  return true;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Arithmetic over numbers with + - * / and parentheses, e.g. "0.2+2*4.8/127".
class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : text_(text) {}

  double parse() {
    const double v = expr();
    skip_space();
    if (pos_ != text_.size()) fail();
    return v;
  }

 private:
  double expr() {
    double v = term();
    for (char c = peek(); c == '+' || c == '-'; c = peek()) {
      ++pos_;
      v = c == '+' ? v + term() : v - term();
    }
    return v;
  }

  double term() {
    double v = factor();
    for (char c = peek(); c == '*' || c == '/'; c = peek()) {
      ++pos_;
      v = c == '*' ? v * factor() : v / factor();
    }
    return v;
  }

  double factor() {
    const char c = peek();
    if (c == '-') {
      ++pos_;
      return -factor();
    }
    if (c == '+') {
      ++pos_;
      return factor();
    }
    if (c == '(') {
      ++pos_;
      const double v = expr();
      if (peek() != ')') fail();
      ++pos_;
      return v;
    }
    const std::string rest(text_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail();
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return v;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail() const { throw InvalidArgument("mesh: not a number: '" + std::string(text_) + "'"); }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double to_double(std::string_view s) {
  const double v = ExpressionParser(trim(s)).parse();
  if (!std::isfinite(v)) throw InvalidArgument("mesh: value is not finite: '" + std::string(s) + "'");
  return v;
}

long to_count(std::string_view s) {
  s = trim(s);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v < 1)
    throw InvalidArgument("mesh: expected a positive count, got '" + std::string(s) + "'");
  return v;
}

std::vector<double> log_points(double a, double b, long n) {
  if (!(a > 0.0 && b > 0.0)) throw InvalidArgument("mesh: log spacing needs positive bounds");
  std::vector<double> pts(static_cast<std::size_t>(n));
  if (n == 1) {
    pts[0] = a;
    return pts;
  }
  const double la = std::log(a), lb = std::log(b);
  for (long i = 0; i < n; ++i) pts[static_cast<std::size_t>(i)] = std::exp(la + (lb - la) * double(i) / double(n - 1));
  pts.front() = a;
  pts.back() = b;
  return pts;
}

// "(...)" where the first parenthesis closes at the very end
bool encloses(std::string_view s) {
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') return false;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    else if (s[i] == ')' && --depth == 0) return i + 1 == s.size();
  }
  return false;
}

}  // namespace

std::vector<double> parse_axis(std::string_view spec) {
  spec = trim(spec);
  if (spec.empty()) throw InvalidArgument("mesh: empty axis specification");
  if (encloses(spec)) spec = trim(spec.substr(1, spec.size() - 2));

  const auto parts = split(spec, ':');
  const auto head = trim(parts.front());
  if (head == "log" || head == "logmid" || head == "lin") {
    if (parts.size() != 4) throw InvalidArgument("mesh: expected " + std::string(head) + ":a:b:n");
    const double a = to_double(parts[1]), b = to_double(parts[2]);
    const long n = to_count(parts[3]);
    if (a > b) throw InvalidArgument("mesh: bounds out of order");
    if (head == "log") return log_points(a, b, n);
    if (head == "logmid") {
      if (n < 2) throw InvalidArgument("mesh: logmid needs n >= 2");
      const auto pts = log_points(a, b, n);
      std::vector<double> mid;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) mid.push_back(std::sqrt(pts[i] * pts[i + 1]));
      return mid;
    }
    std::vector<double> pts(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i)
      pts[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * double(i) / double(n - 1);
    return pts;
  }
  if (parts.size() == 3) {
    const double a = to_double(parts[0]), h = to_double(parts[1]), b = to_double(parts[2]);
    if (!(h > 0.0)) throw InvalidArgument("mesh: step must be positive");
    if (a > b) throw InvalidArgument("mesh: bounds out of order");
    std::vector<double> pts;
    const double slack = 1e-9 * h;
    for (long k = 0;; ++k) {
      const double x = a + double(k) * h;
      if (x > b + slack) break;
      pts.push_back(x);
    }
    return pts;
  }
  if (parts.size() == 1) {
    std::vector<double> pts;
    for (auto item : split(spec, ',')) pts.push_back(to_double(item));
    return pts;
  }
  throw InvalidArgument("mesh: cannot parse '" + std::string(spec) + "'");
}

std::vector<Parameter> tensor_mesh(const std::vector<std::vector<double>>& axes) {
  if (axes.empty()) throw InvalidArgument("mesh: no axes");
  std::vector<Parameter> out{Parameter{}};
  for (const auto& axis : axes) {
    if (axis.empty()) throw InvalidArgument("mesh: empty axis");
    std::vector<Parameter> next;
    next.reserve(out.size() * axis.size());
    for (const auto& prefix : out) {
      for (double v : axis) {
        auto vals = prefix.values();
        vals.push_back(v);
        next.emplace_back(std::move(vals));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<Parameter> parse_mesh(const std::vector<std::string>& axis_specs) {
  std::vector<std::vector<double>> axes;
  for (const auto& s : axis_specs) axes.push_back(parse_axis(s));
  return tensor_mesh(axes);
}

}  // namespace l1roc
