#pragma once

// Shared aliases, error types and tiny numeric helpers used across modules.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace toruscover {

using Vec = std::vector<double>;

/// Caller-supplied values violate a documented precondition.
class input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A request exceeds a configured resource cap (memory, cardinality, ...).
class resource_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative numeric routine failed to reach its tolerance.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail_input(const std::string& msg) { throw input_error(msg); }
[[noreturn]] inline void fail_resource(const std::string& msg) { throw resource_error(msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg) { throw numeric_error(msg); }

inline void require_input(bool ok, const std::string& msg) {
  if (!ok) fail_input(msg);
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kPi = 3.14159265358979323846264338327950288;

inline double sq(double x) { return x * x; }

inline bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm1(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::fabs(v);
  return s;
}

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace toruscover
