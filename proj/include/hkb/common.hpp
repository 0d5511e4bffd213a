// Shared constants, error types and small numeric helpers.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace hkb {

inline constexpr double pi = std::numbers::pi;
inline constexpr double half_pi = std::numbers::pi / 2.0;
inline constexpr double inf = std::numeric_limits<double>::infinity();

// Thrown when an internal consistency check fails (a bug or a numerically
// impossible state, as opposed to bad user input).  CLI maps this to exit 3.
class internal_error : public std::logic_error {
 public:
  explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

namespace detail {

inline double sq(double v) { return v * v; }

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double euclidean_distance(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += sq(a[i] - b[i]);
  return std::sqrt(s);
}

// log(sum_k exp(a_k)) over finite and -inf entries; returns -inf for an
// empty or all--inf input.
inline double log_sum_exp(const std::vector<double>& a) {
  double m = -inf;
  for (double v : a) m = std::max(m, v);
  if (!std::isfinite(m)) return -inf;
  double s = 0.0;
  for (double v : a) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace detail
}  // namespace hkb
