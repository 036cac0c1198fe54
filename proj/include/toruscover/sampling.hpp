#pragma once

// Poisson point processes on tori. Counts use single-uniform inversion below
// mean 30 and PTRD rejection above; point coordinates are drawn sequentially
// from the trial stream, so a fixed-count sample of N points is a prefix of
// the sample of N' >= N points under the same seed (monotone coupling).

#include <cmath>
#include <sstream>

#include "toruscover/pointset.hpp"
#include "toruscover/rng.hpp"
#include "toruscover/torus.hpp"

namespace toruscover::sampling {

using torus::PointSet;
using torus::Torus;

namespace detail {

inline long long poisson_inversion(double mean, double u) {
  // CDF scan against a single uniform; exact for small means.
  long long k = 0;
  double p = std::exp(-mean);
  double cdf = p;
  const long long cap = static_cast<long long>(mean + 60.0 * std::sqrt(mean) + 120.0);
  while (u > cdf && k < cap) {
    ++k;
    p *= mean / double(k);
    cdf += p;
  }
  return k;
}

inline long long poisson_ptrd(double mean, Stream& rng) {
  // Hormann's transformed-rejection sampler (PTRS form), valid for mean >= 10.
  // Two uniforms per round; rounds are i.i.d., so the draw stays a pure
  // function of the stream position.
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.next_unit() - 0.5;
    const double v = rng.next_unit();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long long>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        k * loglam - mean - std::lgamma(k + 1.0))
      return static_cast<long long>(k);
  }
}

}  // namespace detail

/// One Poisson draw with the given mean. mean == 0 returns 0.
inline long long sample_poisson_count(double mean, Stream& rng) {
  require_input(std::isfinite(mean) && mean >= 0.0, "Poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) return detail::poisson_inversion(mean, rng.next_unit());
  return detail::poisson_ptrd(mean, rng);
}

/// Exact Poisson quantile by log-space CDF scan: smallest k with F(k) >= u.
/// One uniform decides the count for every mean, so counts are monotone in
/// the mean under a shared u (used for coupled intensity scans).
inline long long poisson_quantile(double mean, double u) {
  require_input(std::isfinite(mean) && mean >= 0.0, "Poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) return detail::poisson_inversion(mean, u);
  const double log_u = std::log(std::max(u, 1e-300));
  double log_term = -mean;  // log pmf(0)
  double log_cdf = log_term;
  long long k = 0;
  const long long cap = static_cast<long long>(mean + 60.0 * std::sqrt(mean) + 120.0);
  const double log_mean = std::log(mean);
  while (log_cdf < log_u && k < cap) {
    ++k;
    log_term += log_mean - std::log(double(k));
    // log(exp(a) + exp(b)) with a = running cdf, b = new term
    const double hi = std::max(log_cdf, log_term), lo = std::min(log_cdf, log_term);
    log_cdf = hi + std::log1p(std::exp(lo - hi));
  }
  return k;
}

inline void append_uniform_points(const Torus& t, long long count, Stream& rng,
                                  PointSet& out) {
  const int n = t.dim();
  Vec p(n);
  for (long long i = 0; i < count; ++i) {
    for (int j = 0; j < n; ++j) p[j] = t.side(j) * rng.next_unit();
    out.add(p);
  }
}

/// Homogeneous Poisson process with the given intensity (points per unit
/// volume). Expected counts beyond the cap are refused.
inline PointSet sample_ppp(const Torus& t, double intensity, SeedSpec seed,
                           double expected_cap = 1e8) {
  require_input(std::isfinite(intensity) && intensity >= 0.0,
                "intensity must be finite and >= 0");
  const double mean = intensity * t.volume();
  if (mean > expected_cap) {
    std::ostringstream os;
    os << "expected point count " << mean << " exceeds the cap " << expected_cap;
    fail_resource(os.str());
  }
  Stream rng(seed);
  const long long count = sample_poisson_count(mean, rng);
  PointSet ps(t);
  ps.reserve(static_cast<std::size_t>(count));
  append_uniform_points(t, count, rng, ps);
  return ps;
}

/// Exactly `count` uniform points; the first N points agree with any longer
/// sample under the same seed.
inline PointSet sample_fixed_count(const Torus& t, long long count, SeedSpec seed) {
  require_input(count >= 0, "count must be >= 0");
  if (double(count) > 1e8) fail_resource("fixed count exceeds the 1e8 point cap");
  Stream rng(seed);
  PointSet ps(t);
  ps.reserve(static_cast<std::size_t>(count));
  append_uniform_points(t, count, rng, ps);
  return ps;
}

}  // namespace toruscover::sampling
