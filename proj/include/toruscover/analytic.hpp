#pragma once

// Closed-form constants, Poisson tail bounds, intensity formulas and the
// small root-finding problems behind them. Everything that can underflow is
// computed in log space.

#include <cmath>
#include <string>

#include "toruscover/bodies.hpp"
#include "toruscover/common.hpp"

namespace toruscover::analytic {

/// Exact unit-ball volume pi^{n/2} / Gamma(n/2 + 1).
inline double nu_exact(int n) {
  require_input(n >= 0, "dimension must be >= 0");
  return std::exp(bodies::log_unit_ball_volume(n));
}

/// Stirling form (2 pi e)^{n/2} / (sqrt(pi n) n^{n/2}).
inline double nu_asymptotic(int n) {
  require_input(n >= 1, "dimension must be >= 1");
  const double lg =
      0.5 * n * std::log(2.0 * kPi * std::exp(1.0)) - 0.5 * std::log(kPi * n) - 0.5 * n * std::log(double(n));
  return std::exp(lg);
}

struct RootResult {
  double value;
  double residual;
  int iterations;
};

namespace detail {

// Bisection to machine width on a bracketing sign change, then the residual
// is reported at the midpoint.
template <class F>
RootResult bisect(const F& f, double lo, double hi, double tol) {
  double flo = f(lo), fhi = f(hi);
  require_input(flo == 0.0 || fhi == 0.0 || (flo < 0.0) != (fhi < 0.0),
                "root bracket does not straddle a sign change");
  int it = 0;
  while (hi - lo > tol && it < 200) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    ++it;
  }
  const double x = 0.5 * (lo + hi);
  return {x, std::fabs(f(x)), it};
}

}  // namespace detail

/// Unique root of ln(2x/e) = 1/(2x) on [1, 3].
inline RootResult solve_xi(double tol = 1e-14) {
  require_input(finite_positive(tol), "tolerance must be positive");
  const auto f = [](double x) { return std::log(2.0 * x) - 1.0 - 1.0 / (2.0 * x); };
  return detail::bisect(f, 1.0, 3.0, tol);
}

/// Unique root of e^x / (1+x)^{1+x} = e^{-2} on [2, 3], solved in log form.
inline RootResult solve_xi0(double tol = 1e-14) {
  require_input(finite_positive(tol), "tolerance must be positive");
  const auto f = [](double x) { return x - (1.0 + x) * std::log1p(x) + 2.0; };
  return detail::bisect(f, 2.0, 3.0, tol);
}

/// Largest beta in (0,1) with (e^{beta-1} / beta^beta)^{1 + delta/2} <= e^{-1}.
/// The left side is increasing in beta, so the answer is the beta where the
/// log form (1 + delta/2)(beta - 1 - beta ln beta) = -1 binds.
inline RootResult choose_beta(double delta, double tol = 1e-13) {
  require_input(finite_positive(delta), "delta must be positive");
  const double target = -1.0 / (1.0 + 0.5 * delta);  // in (-1, 0)
  const auto h = [target](double b) { return b - 1.0 - b * std::log(b) - target; };
  RootResult r = detail::bisect(h, 1e-12, 1.0 - 1e-12, tol);
  // Report the residual of the original inequality and nudge to the
  // admissible side if rounding pushed the midpoint across.
  const auto g = [delta](double b) {
    return (1.0 + 0.5 * delta) * (b - 1.0 - b * std::log(b)) + 1.0;
  };
  double b = r.value;
  while (g(b) > 0.0) b = std::nextafter(b, 0.0);
  return {b, std::fabs(g(b)), r.iterations};
}

/// log of P[X >= (1+sigma) lambda] upper bound (e^sigma / (1+sigma)^{1+sigma})^lambda.
inline double log_poisson_upper_tail(double lambda, double sigma) {
  require_input(finite_positive(lambda), "lambda must be finite and positive");
  require_input(std::isfinite(sigma) && sigma >= 0.0, "sigma must be finite and >= 0");
  return lambda * (sigma - (1.0 + sigma) * std::log1p(sigma));
}

inline double poisson_upper_tail(double lambda, double sigma) {
  return std::exp(log_poisson_upper_tail(lambda, sigma));
}

/// log of P[X <= (1-sigma) lambda] upper bound (e^{-sigma} / (1-sigma)^{1-sigma})^lambda,
/// sigma in (0,1).
inline double log_poisson_lower_tail(double lambda, double sigma) {
  require_input(finite_positive(lambda), "lambda must be finite and positive");
  require_input(std::isfinite(sigma) && sigma > 0.0 && sigma < 1.0,
                "sigma must lie in (0,1) for the lower tail bound");
  return lambda * (-sigma - (1.0 - sigma) * std::log1p(-sigma));
}

inline double poisson_lower_tail(double lambda, double sigma) {
  return std::exp(log_poisson_lower_tail(lambda, sigma));
}

inline double log_poisson_pmf(double lambda, long long k) {
  if (lambda == 0.0)
    return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return -lambda + k * std::log(lambda) - std::lgamma(double(k) + 1.0);
}

/// Exact P[X >= k0] for X ~ Poisson(lambda), summed in stable order.
inline double poisson_upper_tail_exact(double lambda, long long k0) {
  require_input(finite_positive(lambda), "lambda must be finite and positive");
  if (k0 <= 0) return 1.0;
  double sum = 0.0;
  for (long long k = k0;; ++k) {
    const double term = std::exp(log_poisson_pmf(lambda, k));
    sum += term;
    if (k > k0 + 10 && term < 1e-22 * sum) break;
    if (k - k0 > 400000) break;
  }
  return std::min(sum, 1.0);
}

/// Exact P[X <= k1].
inline double poisson_lower_tail_exact(double lambda, long long k1) {
  require_input(finite_positive(lambda), "lambda must be finite and positive");
  if (k1 < 0) return 0.0;
  double sum = 0.0;
  for (long long k = k1; k >= 0; --k) sum += std::exp(log_poisson_pmf(lambda, k));
  return std::min(sum, 1.0);
}

/// The theorem-level intensities at finite n. `upper_ball` is the
/// (1/2 + delta) n ln n / nu_n rate that guarantees covering for unit balls;
/// the two `lower_*` rates leave uncovered points; `lower_isotropic` is the
/// packing-size form and is NaN unless a packing size is supplied.
struct IntensityFormulas {
  double upper_ball;
  double lower_ball;
  double lower_cube;
  double lower_isotropic;
};

inline IntensityFormulas intensity_formulas(int n, double delta, double body_volume,
                                            double packing_size = kNaN,
                                            double omega = 1.0) {
  require_input(n >= 3, "intensity formulas need n >= 3 (ln ln n must be positive)");
  require_input(std::isfinite(delta) && delta > 0.0 && delta < 1.0,
                "delta must lie in (0,1) for the (1/2 + delta) covering intensity");
  require_input(finite_positive(body_volume), "body volume must be finite and positive");
  const double nlnn = n * std::log(double(n));
  const double nlnlnn = n * std::log(std::log(double(n)));
  IntensityFormulas out{};
  out.upper_ball = (0.5 + delta) * nlnn / nu_exact(n);
  out.lower_ball = (0.5 * nlnn - (1.0 + delta) * nlnlnn) / body_volume;
  out.lower_cube = nlnn - (1.0 + delta) * nlnlnn;
  if (std::isnan(packing_size)) {
    out.lower_isotropic = kNaN;
  } else {
    require_input(packing_size > std::exp(std::exp(1.0)),
                  "packing cardinality must exceed e^e so ln ln ln is defined");
    require_input(std::isfinite(omega) && omega > 0.0, "omega must be positive");
    out.lower_isotropic =
        std::log(packing_size) - n * (std::log(std::log(std::log(packing_size))) + omega);
  }
  return out;
}

struct CardinalityBounds {
  double lower;
  double upper;
};

/// Size bounds for a maximal packing by translates of `body` in a torus of
/// the given volume: vol(T)/vol(2K) <= |P| <= vol(T)/vol(K/2).
inline CardinalityBounds packing_cardinality_bounds(double torus_volume,
                                                    const bodies::Body& body) {
  require_input(finite_positive(torus_volume), "torus volume must be finite and positive");
  const double lv = bodies::log_volume(body);
  const int n = body.dim();
  const double lower = torus_volume / std::exp(lv + n * std::log(2.0));
  const double upper = torus_volume / std::exp(lv - n * std::log(2.0));
  return {lower, upper};
}

/// Second moment (Chebyshev) bound P[B = 0] <= Var[B] / E[B]^2.
inline double second_moment_bound(double expectation, double variance) {
  require_input(finite_positive(expectation), "expectation must be positive");
  require_input(std::isfinite(variance) && variance >= 0.0, "variance must be >= 0");
  return variance / sq(expectation);
}

/// Smallest n >= 2 where (2/(2+delta)) (1/2+delta) (1 - eps)^n >= 1/2 + delta/3
/// with eps = 1/(n ln n); diagnostic for when the saturation chain engages.
inline int saturation_chain_min_n(double delta, int n_max = 1000000) {
  require_input(finite_positive(delta), "delta must be positive");
  for (int n = 2; n <= n_max; ++n) {
    const double eps = 1.0 / (n * std::log(double(n)));
    if (eps >= 1.0) continue;
    const double lhs =
        (2.0 / (2.0 + delta)) * (0.5 + delta) * std::pow(1.0 - eps, double(n));
    if (lhs >= 0.5 + delta / 3.0) return n;
  }
  return -1;
}

}  // namespace toruscover::analytic
