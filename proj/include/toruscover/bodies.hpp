#pragma once

// Centrally symmetric convex bodies (origin-centered) and their exact or
// Monte Carlo volume computations: membership, volumes, difference bodies,
// translate-overlap volumes, isotropic constants and slab tails.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <variant>

#include "toruscover/common.hpp"
#include "toruscover/rng.hpp"

namespace toruscover::bodies {

struct Ball {
  double radius;
};
struct Cube {
  double side;
};
struct CrossPolytope {
  double l1_radius;
};
struct Ellipsoid {
  Vec semi_axes;
};

using Shape = std::variant<Ball, Cube, CrossPolytope, Ellipsoid>;

class Body {
 public:
  static Body ball(int dim, double radius) {
    validate_dim_size(dim, radius, "ball radius");
    return Body(dim, Ball{radius});
  }
  static Body cube(int dim, double side) {
    validate_dim_size(dim, side, "cube side");
    return Body(dim, Cube{side});
  }
  static Body cross_polytope(int dim, double l1_radius) {
    validate_dim_size(dim, l1_radius, "cross-polytope l1 radius");
    return Body(dim, CrossPolytope{l1_radius});
  }
  static Body ellipsoid(Vec semi_axes) {
    require_input(!semi_axes.empty(), "ellipsoid needs at least one semi-axis");
    for (double a : semi_axes)
      require_input(finite_positive(a), "ellipsoid semi-axes must be finite and positive");
    const int n = static_cast<int>(semi_axes.size());
    return Body(n, Ellipsoid{std::move(semi_axes)});
  }

  int dim() const { return dim_; }
  const Shape& shape() const { return shape_; }

  template <class T>
  const T* as() const {
    return std::get_if<T>(&shape_);
  }

 private:
  Body(int dim, Shape s) : dim_(dim), shape_(std::move(s)) {}
  static void validate_dim_size(int dim, double size, const char* what) {
    require_input(dim >= 1, "body dimension must be >= 1");
    require_input(finite_positive(size), std::string(what) + " must be finite and positive");
  }

  int dim_;
  Shape shape_;
};

/// Slab {y : |<direction, y>| < half_width * ||direction||}.
struct SlabSpec {
  Vec direction;
  double half_width;
};

/// Closed membership test for the origin-centered body.
inline bool contains(const Body& b, std::span<const double> x) {
  require_input(static_cast<int>(x.size()) == b.dim(), "point dimension mismatch");
  if (const auto* s = b.as<Ball>()) return dot(x, x) <= sq(s->radius);
  if (const auto* s = b.as<Cube>()) return norm_inf(x) <= 0.5 * s->side;
  if (const auto* s = b.as<CrossPolytope>()) return norm1(x) <= s->l1_radius;
  const auto& ax = b.as<Ellipsoid>()->semi_axes;
  double s = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) s += sq(x[i] / ax[i]);
  return s <= 1.0;
}

inline double log_unit_ball_volume(int n) {
  return 0.5 * n * std::log(kPi) - std::lgamma(0.5 * n + 1.0);
}

inline double log_volume(const Body& b) {
  const int n = b.dim();
  if (const auto* s = b.as<Ball>())
    return log_unit_ball_volume(n) + n * std::log(s->radius);
  if (const auto* s = b.as<Cube>()) return n * std::log(s->side);
  if (const auto* s = b.as<CrossPolytope>())
    return n * std::log(2.0 * s->l1_radius) - std::lgamma(n + 1.0);
  const auto& ax = b.as<Ellipsoid>()->semi_axes;
  double lg = log_unit_ball_volume(n);
  for (double a : ax) lg += std::log(a);
  return lg;
}

inline double volume(const Body& b) { return std::exp(log_volume(b)); }

/// K - K; for these centrally symmetric bodies this is 2K.
inline Body difference_body(const Body& b) {
  const int n = b.dim();
  if (const auto* s = b.as<Ball>()) return Body::ball(n, 2.0 * s->radius);
  if (const auto* s = b.as<Cube>()) return Body::cube(n, 2.0 * s->side);
  if (const auto* s = b.as<CrossPolytope>())
    return Body::cross_polytope(n, 2.0 * s->l1_radius);
  Vec ax = b.as<Ellipsoid>()->semi_axes;
  for (double& a : ax) a *= 2.0;
  return Body::ellipsoid(std::move(ax));
}

/// Radius of the smallest origin-centered euclidean ball containing the body.
inline double circumradius(const Body& b) {
  if (const auto* s = b.as<Ball>()) return s->radius;
  if (const auto* s = b.as<Cube>()) return 0.5 * s->side * std::sqrt(double(b.dim()));
  if (const auto* s = b.as<CrossPolytope>()) return s->l1_radius;
  const auto& ax = b.as<Ellipsoid>()->semi_axes;
  return *std::max_element(ax.begin(), ax.end());
}

/// Radius of the largest origin-centered euclidean ball inside the body.
inline double inradius(const Body& b) {
  if (const auto* s = b.as<Ball>()) return s->radius;
  if (const auto* s = b.as<Cube>()) return 0.5 * s->side;
  if (const auto* s = b.as<CrossPolytope>())
    return s->l1_radius / std::sqrt(double(b.dim()));
  const auto& ax = b.as<Ellipsoid>()->semi_axes;
  return *std::min_element(ax.begin(), ax.end());
}

/// vol(C ∩ (C + offset)) for an axis-aligned cube of the given side:
/// the product of per-axis interval overlaps.
inline double cube_overlap_volume(double side, std::span<const double> offset) {
  require_input(finite_positive(side), "cube side must be finite and positive");
  double v = 1.0;
  for (double o : offset) {
    const double w = side - std::fabs(o);
    if (w <= 0.0) return 0.0;
    v *= w;
  }
  return v;
}

namespace detail {

// Adaptive Simpson on f over [a,b]; eps is an absolute tolerance.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) fail_numeric("overlap quadrature did not converge");
  if (std::fabs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

template <class F>
double integrate(const F& f, double a, double b, double eps) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, eps, 52);
}

}  // namespace detail

/// vol(B ∩ (B + x)) for euclidean balls of radius r at center distance d,
/// via 1-D quadrature of the cap cross-sections (substitution t = r sin θ
/// keeps the integrand smooth). Absolute tolerance 1e-12 relative to the
/// ball volume.
inline double ball_overlap_volume(int n, double r, double dist) {
  require_input(n >= 1, "dimension must be >= 1");
  require_input(finite_positive(r), "ball radius must be finite and positive");
  require_input(std::isfinite(dist) && dist >= 0.0, "center distance must be finite and >= 0");
  const double vol = std::exp(log_unit_ball_volume(n) + n * std::log(r));
  if (dist >= 2.0 * r) return 0.0;
  if (dist == 0.0) return vol;
  const double theta0 = std::asin(dist / (2.0 * r));
  const double scale = 2.0 * std::exp(log_unit_ball_volume(n - 1) + n * std::log(r));
  const double eps = 1e-12 * vol / std::max(scale, 1e-300);
  const auto f = [n](double t) { return std::pow(std::cos(t), n); };
  const double integral = detail::integrate(f, theta0, 0.5 * kPi, eps);
  return std::min(vol, scale * integral);
}

/// Upper bound d * vol(B_r^{n-1}) for vol(B_r(x1) \ B_r(x2)) at ||x1-x2|| = d.
/// vol of the 0-dimensional ball is 1 by convention.
inline double ball_symmetric_difference_bound(int n, double r, double dist) {
  require_input(n >= 1, "dimension must be >= 1");
  require_input(finite_positive(r), "ball radius must be finite and positive");
  require_input(std::isfinite(dist) && dist >= 0.0, "center distance must be finite and >= 0");
  if (n == 1) return dist;
  return dist * std::exp(log_unit_ball_volume(n - 1) + (n - 1) * std::log(r));
}

namespace detail {

inline Vec ellipsoid_axis_moments(const Vec& ax) {
  const int n = static_cast<int>(ax.size());
  double lg = log_unit_ball_volume(n);
  for (double a : ax) lg += std::log(a);
  const double t = std::exp(-lg / n);  // scale making the volume 1
  Vec m(ax.size());
  for (std::size_t i = 0; i < ax.size(); ++i) m[i] = sq(t * ax[i]) / (n + 2.0);
  return m;
}

}  // namespace detail

/// Isotropic constant L_K of the body rescaled to volume 1: the common value
/// of the second moment along every direction. Errors for bodies that are
/// not in isotropic position (ellipsoids with unequal semi-axes).
inline double isotropic_constant(const Body& b) {
  const int n = b.dim();
  if (b.as<Cube>()) return 1.0 / std::sqrt(12.0);
  if (b.as<Ball>()) {
    const double rn = std::exp(-log_unit_ball_volume(n) / n);
    return rn / std::sqrt(n + 2.0);
  }
  if (b.as<CrossPolytope>()) {
    const double an = 0.5 * std::exp(std::lgamma(n + 1.0) / n);
    return an * std::sqrt(2.0 / ((n + 1.0) * (n + 2.0)));
  }
  const auto& ax = b.as<Ellipsoid>()->semi_axes;
  const double amin = *std::min_element(ax.begin(), ax.end());
  const double amax = *std::max_element(ax.begin(), ax.end());
  if (amax - amin <= 1e-12 * amax) {
    const double rn = std::exp(-log_unit_ball_volume(n) / n);
    return rn / std::sqrt(n + 2.0);
  }
  std::ostringstream os;
  os << "ellipsoid with unequal semi-axes is not in isotropic position; "
        "per-axis second moments after volume normalization:";
  for (double m : detail::ellipsoid_axis_moments(ax)) os << ' ' << m;
  fail_input(os.str());
}

/// Overlap bound 3^{-||x|| / (8 L_K)} for volume-1 isotropic bodies;
/// valid only when ||x|| >= 4 L_K.
inline double small_overlap_bound(double isotropic_l, double offset_norm) {
  require_input(finite_positive(isotropic_l), "isotropic constant must be positive");
  require_input(std::isfinite(offset_norm) && offset_norm >= 4.0 * isotropic_l,
                "small_overlap_bound requires ||offset|| >= 4 * L_K");
  return std::exp(-offset_norm / (8.0 * isotropic_l) * std::log(3.0));
}

/// Translate-overlap volume dispatched per shape. Cube and ball (and
/// ellipsoid, reduced to a ball) are exact; cross-polytope overlaps have no
/// closed form here and are rejected.
inline double overlap_volume(const Body& b, std::span<const double> offset) {
  require_input(static_cast<int>(offset.size()) == b.dim(), "offset dimension mismatch");
  if (const auto* s = b.as<Cube>()) return cube_overlap_volume(s->side, offset);
  if (const auto* s = b.as<Ball>()) return ball_overlap_volume(b.dim(), s->radius, norm2(offset));
  if (const auto* s = b.as<Ellipsoid>()) {
    // E = A B_1 with A = diag(axes): vol(E ∩ (E+x)) = det(A) vol(B_1 ∩ (B_1 + A^{-1}x)).
    const auto& ax = s->semi_axes;
    double det = 1.0, d2 = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
      det *= ax[i];
      d2 += sq(offset[i] / ax[i]);
    }
    return det * ball_overlap_volume(b.dim(), 1.0, std::sqrt(d2));
  }
  fail_input("overlap volume for cross-polytope bodies has no exact form here");
}

/// Uniform sample inside the body (origin-centered).
inline void sample_point(const Body& b, Stream& rng, std::span<double> out) {
  const int n = b.dim();
  if (const auto* s = b.as<Cube>()) {
    for (int i = 0; i < n; ++i) out[i] = s->side * (rng.next_unit() - 0.5);
    return;
  }
  if (b.as<Ball>() || b.as<Ellipsoid>()) {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
      out[i] = rng.next_gauss();
      r2 += sq(out[i]);
    }
    const double scale = std::pow(rng.next_open(), 1.0 / n) / std::max(std::sqrt(r2), 1e-300);
    if (const auto* s = b.as<Ball>()) {
      for (int i = 0; i < n; ++i) out[i] *= scale * s->radius;
    } else {
      const auto& ax = b.as<Ellipsoid>()->semi_axes;
      for (int i = 0; i < n; ++i) out[i] *= scale * ax[i];
    }
    return;
  }
  // Cross-polytope: n+1 exponentials give a uniform simplex point; signs flip.
  const auto* s = b.as<CrossPolytope>();
  double sum = rng.next_exp();
  for (int i = 0; i < n; ++i) {
    out[i] = rng.next_exp();
    sum += out[i];
  }
  for (int i = 0; i < n; ++i) {
    out[i] *= s->l1_radius / sum;
    if (rng.next_unit() < 0.5) out[i] = -out[i];
  }
}

struct McEstimate {
  double value;
  double std_error;
  long long samples;
};

/// Monte Carlo estimate of vol(K \ S) for slab S = {|<x,y>| < w||x||}.
inline McEstimate slab_tail_volume_mc(const Body& b, const SlabSpec& slab,
                                      long long samples, SeedSpec seed) {
  require_input(samples >= 10000, "slab tail MC needs at least 10^4 samples");
  require_input(static_cast<int>(slab.direction.size()) == b.dim(),
                "slab direction dimension mismatch");
  require_input(std::isfinite(slab.half_width) && slab.half_width >= 0.0,
                "slab half width must be finite and >= 0");
  const double dn = norm2(slab.direction);
  require_input(dn > 0.0, "slab direction must be nonzero");
  Stream rng(seed);
  Vec y(b.dim());
  long long outside = 0;
  const double thresh = slab.half_width * dn;
  for (long long i = 0; i < samples; ++i) {
    sample_point(b, rng, y);
    if (std::fabs(dot(slab.direction, y)) >= thresh) ++outside;
  }
  const double frac = double(outside) / double(samples);
  const double vol = volume(b);
  return {vol * frac, vol * std::sqrt(frac * (1.0 - frac) / double(samples)), samples};
}

}  // namespace toruscover::bodies
