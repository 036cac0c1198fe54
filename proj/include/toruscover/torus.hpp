#pragma once

// Flat tori R^n / diag(c_1..c_n) Z^n: reduction, the quotient metric, and
// the packing-torus test that makes translate projections injective.

#include <cmath>
#include <sstream>

#include "toruscover/bodies.hpp"
#include "toruscover/common.hpp"

namespace toruscover::torus {

class Torus {
 public:
  explicit Torus(Vec sides) : sides_(std::move(sides)) {
    require_input(!sides_.empty(), "torus needs at least one side");
    for (double c : sides_)
      require_input(finite_positive(c), "torus sides must be finite and positive");
  }

  int dim() const { return static_cast<int>(sides_.size()); }
  const Vec& sides() const { return sides_; }
  double side(int i) const { return sides_[i]; }

  double min_side() const {
    double m = sides_[0];
    for (double c : sides_) m = std::min(m, c);
    return m;
  }

  double volume() const {
    double v = 1.0;
    for (double c : sides_) v *= c;
    return v;
  }

  /// Map each coordinate into [0, c_i).
  void reduce_inplace(std::span<double> x) const {
    for (int i = 0; i < dim(); ++i) {
      const double c = sides_[i];
      double v = std::fmod(x[i], c);
      if (v < 0.0) v += c;
      if (v >= c) v = 0.0;  // fmod rounding at the seam
      x[i] = v;
    }
  }

  Vec reduce(std::span<const double> x) const {
    Vec out(x.begin(), x.end());
    reduce_inplace(out);
    return out;
  }

  /// Per-axis representative of a - b in [-c_i/2, c_i/2).
  void symmetric_diff(std::span<const double> a, std::span<const double> b,
                      std::span<double> out) const {
    for (int i = 0; i < dim(); ++i) {
      const double c = sides_[i];
      double d = std::fmod(a[i] - b[i], c);
      if (d < -0.5 * c) d += c;
      if (d >= 0.5 * c) d -= c;
      out[i] = d;
    }
  }

  /// Quotient euclidean metric: sqrt(sum_i min(|d_i|, c_i - |d_i|)^2).
  double distance(std::span<const double> a, std::span<const double> b) const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
      const double c = sides_[i];
      double d = std::fabs(a[i] - b[i]);
      d = std::fmod(d, c);
      d = std::min(d, c - d);
      s += d * d;
    }
    return std::sqrt(s);
  }

  /// Quotient l1 metric: sum_i min(|d_i|, c_i - |d_i|).
  double distance_l1(std::span<const double> a, std::span<const double> b) const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
      const double c = sides_[i];
      double d = std::fabs(a[i] - b[i]);
      d = std::fmod(d, c);
      s += std::min(d, c - d);
    }
    return s;
  }

  bool same_shape(const Torus& o) const { return sides_ == o.sides_; }

 private:
  Vec sides_;
};

/// True iff distinct lattice translates of the body are pairwise disjoint
/// (closed bodies: tangency counts as overlap). Checks every nonzero lattice
/// vector that could land in body - body; the lattice is rectangular, so the
/// candidate set is a finite box.
inline bool is_packing_torus(const Torus& t, const bodies::Body& body) {
  require_input(t.dim() == body.dim(), "torus and body dimension mismatch");
  const bodies::Body diff = bodies::difference_body(body);
  const double reach = bodies::circumradius(diff);
  const int n = t.dim();
  std::vector<long> kmax(n);
  double combos = 1.0;
  for (int i = 0; i < n; ++i) {
    kmax[i] = static_cast<long>(std::floor(reach / t.side(i)));
    combos *= 2.0 * kmax[i] + 1.0;
    if (combos > 2e9)
      fail_resource("packing check would enumerate more than 2e9 lattice candidates");
  }
  std::vector<long> k(n, 0);
  Vec lambda(n);
  for (int i = 0; i < n; ++i) k[i] = -kmax[i];
  while (true) {
    bool zero = true;
    for (int i = 0; i < n; ++i) {
      lambda[i] = k[i] * t.side(i);
      zero &= (k[i] == 0);
    }
    if (!zero && bodies::contains(diff, lambda)) return false;
    int axis = n - 1;
    while (axis >= 0 && k[axis] == kmax[axis]) {
      k[axis] = -kmax[axis];
      --axis;
    }
    if (axis < 0) break;
    ++k[axis];
  }
  return true;
}

}  // namespace toruscover::torus
