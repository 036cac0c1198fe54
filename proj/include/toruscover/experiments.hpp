#pragma once

// Experiment pipelines over the geometry/sampling/coverage layers:
//   - run_cover:                verdict counts at a single intensity
//   - run_coverage_scan:        intensity grid -> isotonic curve -> threshold
//   - run_multiplicity_profile: law of the multiplicity at a fixed point
//   - run_e123_diagnostics:     saturation / neighbour-count event frequencies
//   - run_second_moment:        uncovered-target count B, analytic vs empirical
//   - run_lemma_suite:          non-asymptotic inequality ledger
//
// Every pipeline is a deterministic function of (config, master_seed): trials
// are keyed by trial index, run on a worker pool, and folded in trial order,
// so the report is identical for any thread count.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "toruscover/analytic.hpp"
#include "toruscover/bodies.hpp"
#include "toruscover/coverage.hpp"
#include "toruscover/nets.hpp"
#include "toruscover/pointset.hpp"
#include "toruscover/rng.hpp"
#include "toruscover/sampling.hpp"
#include "toruscover/torus.hpp"

namespace toruscover::experiments {

using bodies::Body;
using coverage::CoverStatus;
using torus::NetNorm;
using torus::PointSet;
using torus::ProbeNet;
using torus::SeparationNorm;
using torus::Torus;

// ---------------------------------------------------------------------------
// Parallel trial runner: deterministic because workers only fill disjoint
// slots; any fold over results happens afterwards in index order.
// ---------------------------------------------------------------------------

template <class Fn>
void parallel_for(std::size_t count, int threads, const Fn& fn) {
  if (threads < 1) threads = 1;
  if (threads == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int spawn = static_cast<int>(std::min<std::size_t>(count, std::size_t(threads)));
  pool.reserve(spawn);
  for (int k = 0; k < spawn; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  // geometry
  std::string body_kind = "ball";  // ball | cube | cross | ellipsoid
  double body_param = 0.4;         // radius / side / l1 radius
  Vec ellipsoid_axes;              // ellipsoid only
  Vec torus_sides = {3.0, 3.0, 3.0};

  // sampling
  double intensity = 1.0;  // single-intensity pipelines
  Vec intensity_grid;      // scan pipeline, ascending
  long long trials = 400;
  std::uint64_t master_seed = 1;

  // certification
  double h = 0.0;               // probe-net covering radius; 0 = default
  std::string net_norm = "l2";  // l2 | linf
  int h_refine = 0;             // scan-only: levels of local probe-cell
                                // subdivision for undetermined verdicts
  double undetermined_cap = 0.05;
  double net_cardinality_cap = 1e8;
  double mult_net_cap = 3e6;   // skip multiplicity sweeps on larger nets
  long long mult_trials = 0;   // leading trials that also run multiplicity sweeps
  long long bootstrap_resamples = 200;

  // event diagnostics
  double delta = 0.3;
  double eps_override = 0.0;            // 0 = r / (n ln n)
  double mu_override = 0.0;             // 0 = r * n^(-1/2 - delta/4)
  std::string packing_stream = "grid";  // grid | uniform
  double packing_stream_step = 0.0;     // 0 = half the separation
  long long packing_stream_count = 20000;

  // second moment
  double separation = 0.5;
  std::string separation_norm = "l2";  // l2 | l1
  std::string target_stream = "grid";  // grid | uniform
  double target_stream_step = 0.0;     // 0 = separation
  long long target_stream_count = 20000;
  double f_n = 2.0;
  double omega = 1.0;
  long long mc_samples = 1000000;

  // caps
  double expected_points_cap = 1e8;

  int dim() const { return static_cast<int>(torus_sides.size()); }

  Body make_body() const {
    const int n = dim();
    if (body_kind == "ball") return Body::ball(n, body_param);
    if (body_kind == "cube") return Body::cube(n, body_param);
    if (body_kind == "cross") return Body::cross_polytope(n, body_param);
    if (body_kind == "ellipsoid") return Body::ellipsoid(ellipsoid_axes);
    fail_input("unknown body kind '" + body_kind +
               "' (expected ball | cube | cross | ellipsoid)");
  }

  Torus make_torus() const { return Torus(torus_sides); }

  NetNorm make_net_norm() const {
    if (net_norm == "l2") return NetNorm::l2;
    if (net_norm == "linf") return NetNorm::linf;
    fail_input("unknown net norm '" + net_norm + "' (expected l2 | linf)");
  }

  SeparationNorm make_separation_norm() const {
    if (separation_norm == "l2") return SeparationNorm::l2;
    if (separation_norm == "l1") return SeparationNorm::l1;
    fail_input("unknown separation norm '" + separation_norm + "' (expected l2 | l1)");
  }

  /// Net covering radius actually used: the explicit knob, or one tenth of the
  /// body inradius capped at 0.02.
  double resolved_h() const {
    if (h > 0.0) return h;
    return std::min(0.02, bodies::inradius(make_body()) / 10.0);
  }

  /// M = (vol(T) / nu_n)^(1/n): the torus-to-unit-ball volume ratio knob.
  double torus_volume_ratio() const {
    const int n = dim();
    const Torus t = make_torus();
    return std::exp((std::log(t.volume()) - bodies::log_unit_ball_volume(n)) / n);
  }

  void validate() const {
    require_input(!torus_sides.empty(), "torus_sides must be nonempty");
    for (double s : torus_sides)
      require_input(finite_positive(s), "torus sides must be finite and positive");
    const Body body = make_body();
    const Torus t = make_torus();
    require_input(body.dim() == t.dim(), "body and torus dimension mismatch");
    require_input(
        bodies::circumradius(body) < 0.5 * t.min_side(),
        "body circumradius must be below half the least torus side");
    if (!torus::is_packing_torus(t, bodies::difference_body(body)))
      fail_input(
          "torus is not a packing torus of the difference body K-K: some "
          "lattice translate of K-K meets K-K, so K-translates do not embed "
          "injectively; enlarge the torus sides");
    require_input(trials > 0, "trials must be positive");
    require_input(std::isfinite(intensity) && intensity >= 0.0,
                  "intensity must be finite and >= 0");
    for (std::size_t i = 0; i < intensity_grid.size(); ++i) {
      require_input(std::isfinite(intensity_grid[i]) && intensity_grid[i] >= 0.0,
                    "intensity grid entries must be finite and >= 0");
      if (i > 0)
        require_input(intensity_grid[i] > intensity_grid[i - 1],
                      "intensity grid must be strictly ascending");
    }
    require_input(h >= 0.0 && std::isfinite(h), "h must be finite and >= 0");
    (void)make_net_norm();
    (void)make_separation_norm();
    require_input(h_refine >= 0 && h_refine <= 12, "h_refine must lie in [0,12]");
    require_input(undetermined_cap >= 0.0 && undetermined_cap <= 1.0,
                  "undetermined_cap must lie in [0,1]");
    require_input(bootstrap_resamples > 0, "bootstrap_resamples must be positive");
    require_input(mult_trials >= 0, "mult_trials must be >= 0");
    require_input(finite_positive(net_cardinality_cap), "net_cardinality_cap must be positive");
    require_input(finite_positive(mult_net_cap), "mult_net_cap must be positive");
    require_input(finite_positive(expected_points_cap), "expected_points_cap must be positive");
    require_input(finite_positive(delta) && delta < 1.0, "delta must lie in (0,1)");
    require_input(eps_override >= 0.0, "eps_override must be >= 0");
    require_input(mu_override >= 0.0, "mu_override must be >= 0");
    require_input(packing_stream == "grid" || packing_stream == "uniform",
                  "packing_stream must be grid | uniform");
    require_input(packing_stream_step >= 0.0, "packing_stream_step must be >= 0");
    require_input(packing_stream_count > 0, "packing_stream_count must be positive");
    require_input(finite_positive(separation), "separation must be positive");
    require_input(target_stream == "grid" || target_stream == "uniform",
                  "target_stream must be grid | uniform");
    require_input(target_stream_step >= 0.0, "target_stream_step must be >= 0");
    require_input(target_stream_count > 0, "target_stream_count must be positive");
    require_input(std::isfinite(f_n), "f_n must be finite");
    require_input(std::isfinite(omega), "omega must be finite");
    require_input(mc_samples >= 10000, "mc_samples must be >= 10000");
  }
};

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

namespace detail {

// Trial-index offsets reserve disjoint stream families for auxiliary draws.
inline constexpr std::uint64_t kBootstrapStreamBase = 0x626F6F74ULL << 32;  // "boot"
inline constexpr std::uint64_t kMcStreamBase = 0x6D630000ULL << 32;         // "mc"

/// Pool-adjacent-violators: least-squares nondecreasing fit.
inline std::vector<double> isotonic_fit(const std::vector<double>& y,
                                        const std::vector<double>& w) {
  const std::size_t n = y.size();
  std::vector<double> level, weight;
  std::vector<std::size_t> count;
  level.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    level.push_back(y[i]);
    weight.push_back(w[i]);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const double wsum = weight[weight.size() - 2] + weight.back();
      const double merged =
          (level[level.size() - 2] * weight[weight.size() - 2] +
           level.back() * weight.back()) /
          wsum;
      const std::size_t c = count.back();
      level.pop_back();
      weight.pop_back();
      count.pop_back();
      level.back() = merged;
      weight.back() = wsum;
      count.back() += c;
    }
  }
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t b = 0; b < level.size(); ++b)
    for (std::size_t k = 0; k < count[b]; ++k) out.push_back(level[b]);
  return out;
}

/// First 0.5 crossing of a nondecreasing curve over an ascending grid.
/// Returns -inf when the curve starts at or above 0.5 (crossing below the
/// grid) and +inf when it never reaches 0.5 (crossing above the grid).
inline double curve_threshold(const Vec& grid, const std::vector<double>& fit) {
  const std::size_t n = grid.size();
  std::size_t i = 0;
  while (i < n && fit[i] < 0.5) ++i;
  if (i == n) return std::numeric_limits<double>::infinity();
  if (i == 0) return -std::numeric_limits<double>::infinity();
  const double f0 = fit[i - 1], f1 = fit[i];
  return grid[i - 1] + (0.5 - f0) * (grid[i] - grid[i - 1]) / (f1 - f0);
}

struct WilsonInterval {
  double lo, hi;
};

inline WilsonInterval wilson_interval(long long successes, long long total,
                                      double z = 1.959963984540054) {
  if (total <= 0) return {kNaN, kNaN};
  const double nn = double(total);
  const double p = double(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // exact endpoints at the boundary counts, where center == half analytically
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == total ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - double(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline PointSet prefix_point_set(const Torus& t, const Vec& coords, int n,
                                 long long count) {
  PointSet ps(t);
  ps.reserve(static_cast<std::size_t>(count));
  for (long long k = 0; k < count; ++k)
    ps.add(std::span<const double>(coords.data() + k * n, n));
  return ps;
}

inline ProbeNet build_net(const ExperimentConfig& cfg) {
  return torus::build_probe_net(cfg.make_torus(), cfg.resolved_h(),
                                cfg.make_net_norm(), cfg.net_cardinality_cap);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single-intensity cover run
// ---------------------------------------------------------------------------

struct CoverReport {
  long long trials = 0;
  long long covered = 0, uncovered = 0, undetermined = 0;
  double cover_frac = 0.0, cover_lo = 0.0, cover_hi = 0.0;  // Wilson
  double mean_density = 0.0;
  double intensity = 0.0;
  double body_volume = 0.0, torus_volume = 0.0, m_ratio = 0.0;
  double resolved_h = 0.0;
  long long net_points = 0;
  std::vector<std::string> trial_columns;
  std::vector<Vec> trial_log;  // trial, count, status, density
};

inline CoverReport run_cover(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const Body body = cfg.make_body();
  const Torus t = cfg.make_torus();
  const ProbeNet net = detail::build_net(cfg);
  const double volK = bodies::volume(body);
  const double volT = t.volume();
  const std::size_t trials = static_cast<std::size_t>(cfg.trials);

  std::vector<int> status(trials);
  std::vector<long long> counts(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    const PointSet X = sampling::sample_ppp(
        t, cfg.intensity, SeedSpec{cfg.master_seed, std::uint64_t(i)},
        cfg.expected_points_cap);
    counts[i] = static_cast<long long>(X.size());
    const auto verdict = coverage::certify_coverage(X, body, net);
    status[i] = verdict.status == CoverStatus::Covered     ? 0
                : verdict.status == CoverStatus::Uncovered ? 1
                                                           : 2;
  });

  CoverReport rep;
  rep.trials = cfg.trials;
  rep.intensity = cfg.intensity;
  rep.body_volume = volK;
  rep.torus_volume = volT;
  rep.m_ratio = cfg.torus_volume_ratio();
  rep.resolved_h = cfg.resolved_h();
  rep.net_points = net.size();
  rep.trial_columns = {"trial", "count", "status", "density"};
  double dsum = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    if (status[i] == 0) ++rep.covered;
    else if (status[i] == 1) ++rep.uncovered;
    else ++rep.undetermined;
    const double density = double(counts[i]) * volK / volT;
    dsum += density;
    rep.trial_log.push_back({double(i), double(counts[i]), double(status[i]), density});
  }
  rep.cover_frac = double(rep.covered) / double(rep.trials);
  const auto ci = detail::wilson_interval(rep.covered, rep.trials);
  rep.cover_lo = ci.lo;
  rep.cover_hi = ci.hi;
  rep.mean_density = dsum / double(rep.trials);
  return rep;
}

// ---------------------------------------------------------------------------
// Intensity scan
// ---------------------------------------------------------------------------

struct ScanRow {
  double intensity = 0.0;
  long long trials = 0;
  long long covered = 0, uncovered = 0, undetermined = 0;
  double cover_frac = 0.0;
  double cover_lo = 0.0, cover_hi = 0.0;  // bootstrap CI of the covered fraction
  double isotonic = 0.0;
  double mean_density = 0.0;
  double mean_mult_lower = kNaN, mean_mult_upper = kNaN;
};

struct ScanTable {
  std::vector<ScanRow> rows;
  double threshold = kNaN;     // intensity where the isotonic curve crosses 0.5
  double ci_lo = kNaN, ci_hi = kNaN;
  bool extrapolated = false;   // crossing outside the scanned interval
  bool undetermined_warning = false;
  double worst_undetermined_frac = 0.0;
  double threshold_normalized = kNaN;  // threshold * vol(K) / (n ln n)
  double body_volume = 0.0, torus_volume = 0.0, m_ratio = 0.0;
  double resolved_h = 0.0;
  long long net_points = 0;
  long long mult_trials_used = 0;
  std::vector<std::string> trial_columns;
  std::vector<Vec> trial_log;  // trial, top_count, first_not_uncovered, first_covered
};

namespace detail {

/// Coupled verdict boundaries for one trial: counts at every grid intensity
/// come from one uniform (so they are monotone), points are a shared prefix,
/// and the verdict pattern along the grid is Uncovered* Undetermined* Covered*.
/// b1 = first grid index not Uncovered, b2 = first index Covered.
struct TrialBoundaries {
  long b1 = 0, b2 = 0;
  std::vector<long long> counts;
};

inline TrialBoundaries scan_trial(const ExperimentConfig& cfg, const Torus& t,
                                  const Body& body, const ProbeNet& net,
                                  const Vec& grid, std::uint64_t trial) {
  const int n = t.dim();
  const long G = static_cast<long>(grid.size());
  const double volT = t.volume();
  Stream rng(SeedSpec{cfg.master_seed, trial});
  const double u = rng.next_open();
  TrialBoundaries out;
  out.counts.resize(G);
  for (long g = 0; g < G; ++g) {
    const double mean = grid[g] * volT;
    if (mean > cfg.expected_points_cap) {
      std::ostringstream os;
      os << "expected point count " << mean << " exceeds the cap "
         << cfg.expected_points_cap;
      fail_resource(os.str());
    }
    out.counts[g] = sampling::poisson_quantile(mean, u);
  }
  const long long top = out.counts[G - 1];
  Vec coords(static_cast<std::size_t>(top) * n);
  for (long long k = 0; k < top; ++k)
    for (int i = 0; i < n; ++i) coords[k * n + i] = t.side(i) * rng.next_unit();

  // memo[g]: -1 unknown, 0 covered, 1 uncovered, 2 undetermined
  std::vector<int> memo(G, -1);
  const auto eval = [&](long g) {
    int& m = memo[g];
    if (m < 0) {
      const PointSet X = prefix_point_set(t, coords, n, out.counts[g]);
      const auto v = coverage::certify_coverage_refined(X, body, net, cfg.h_refine);
      m = v.status == CoverStatus::Covered     ? 0
          : v.status == CoverStatus::Uncovered ? 1
                                               : 2;
    }
    return m;
  };
  // Adding points never breaks a Covered certificate and never creates an
  // Uncovered one, so along the coupled grid the verdict pattern is
  // Uncovered* Undetermined* Covered* and two binary searches locate it.
  // first index whose verdict is not Uncovered
  long lo = 0, hi = G;
  while (lo < hi) {
    const long mid = lo + (hi - lo) / 2;
    if (eval(mid) != 1) hi = mid;
    else lo = mid + 1;
  }
  out.b1 = lo;
  // first index whose verdict is Covered
  hi = G;
  while (lo < hi) {
    const long mid = lo + (hi - lo) / 2;
    if (eval(mid) == 0) hi = mid;
    else lo = mid + 1;
  }
  out.b2 = lo;
  return out;
}

}  // namespace detail

inline ScanTable run_coverage_scan(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  require_input(!cfg.intensity_grid.empty(), "intensity grid must be nonempty");
  const Body body = cfg.make_body();
  const Torus t = cfg.make_torus();
  const ProbeNet net = detail::build_net(cfg);
  const Vec& grid = cfg.intensity_grid;
  const long G = static_cast<long>(grid.size());
  const std::size_t trials = static_cast<std::size_t>(cfg.trials);
  const double volK = bodies::volume(body);
  const double volT = t.volume();
  const int n = t.dim();

  std::vector<detail::TrialBoundaries> tb(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    tb[i] = detail::scan_trial(cfg, t, body, net, grid, std::uint64_t(i));
  });

  ScanTable table;
  table.rows.resize(G);
  table.body_volume = volK;
  table.torus_volume = volT;
  table.m_ratio = cfg.torus_volume_ratio();
  table.resolved_h = cfg.resolved_h();
  table.net_points = net.size();

  for (long g = 0; g < G; ++g) {
    auto& row = table.rows[g];
    row.intensity = grid[g];
    row.trials = cfg.trials;
    double dsum = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
      if (g >= tb[i].b2) ++row.covered;
      else if (g < tb[i].b1) ++row.uncovered;
      else ++row.undetermined;
      dsum += double(tb[i].counts[g]) * volK / volT;
    }
    row.cover_frac = double(row.covered) / double(row.trials);
    row.mean_density = dsum / double(row.trials);
    const double und_frac = double(row.undetermined) / double(row.trials);
    table.worst_undetermined_frac = std::max(table.worst_undetermined_frac, und_frac);
    if (und_frac > cfg.undetermined_cap) table.undetermined_warning = true;
  }

  // isotonic fit + threshold on the covered fraction (undetermined excluded)
  std::vector<double> frac(G), w(G, 1.0);
  for (long g = 0; g < G; ++g) frac[g] = table.rows[g].cover_frac;
  const auto fit = detail::isotonic_fit(frac, w);
  for (long g = 0; g < G; ++g) table.rows[g].isotonic = fit[g];
  double theta = detail::curve_threshold(grid, fit);

  // bootstrap over trials: row CIs and threshold CI from the same resamples
  const long B = static_cast<long>(cfg.bootstrap_resamples);
  std::vector<double> thetas;
  thetas.reserve(B);
  std::vector<std::vector<double>> row_fracs(G);
  for (long g = 0; g < G; ++g) row_fracs[g].reserve(B);
  for (long b = 0; b < B; ++b) {
    Stream rng(SeedSpec{cfg.master_seed, detail::kBootstrapStreamBase + std::uint64_t(b)});
    std::vector<long long> cov(G, 0);
    for (std::size_t i = 0; i < trials; ++i) {
      const std::size_t pick =
          std::min<std::size_t>(trials - 1,
                                static_cast<std::size_t>(rng.next_unit() * double(trials)));
      for (long g = tb[pick].b2; g < G; ++g) ++cov[g];
    }
    std::vector<double> bf(G);
    for (long g = 0; g < G; ++g) {
      bf[g] = double(cov[g]) / double(trials);
      row_fracs[g].push_back(bf[g]);
    }
    thetas.push_back(detail::curve_threshold(grid, detail::isotonic_fit(bf, w)));
  }
  for (long g = 0; g < G; ++g) {
    table.rows[g].cover_lo = detail::percentile(row_fracs[g], 0.025);
    table.rows[g].cover_hi = detail::percentile(row_fracs[g], 0.975);
  }
  double ci_lo = detail::percentile(thetas, 0.025);
  double ci_hi = detail::percentile(thetas, 0.975);

  // undetermined handling: when any row exceeds the cap, bracket both
  // resolutions of the undetermined verdicts (as covered / as uncovered)
  if (table.undetermined_warning) {
    std::vector<double> fracA(G);  // undetermined counted as covered
    for (long g = 0; g < G; ++g)
      fracA[g] = double(table.rows[g].covered + table.rows[g].undetermined) /
                 double(table.rows[g].trials);
    const double thetaA = detail::curve_threshold(grid, detail::isotonic_fit(fracA, w));
    ci_lo = std::min(ci_lo, thetaA);
    ci_hi = std::max(ci_hi, theta);  // theta already resolves undetermined as uncovered
    if (!std::isfinite(thetaA)) table.extrapolated = true;
  }

  table.threshold = theta;
  table.ci_lo = ci_lo;
  table.ci_hi = ci_hi;
  if (!std::isfinite(theta) || !std::isfinite(ci_lo) || !std::isfinite(ci_hi))
    table.extrapolated = true;
  if (table.extrapolated) {
    table.threshold = std::isfinite(theta) ? theta : kNaN;
    if (!std::isfinite(ci_lo)) table.ci_lo = kNaN;
    if (!std::isfinite(ci_hi)) table.ci_hi = kNaN;
  }
  if (n >= 2 && std::isfinite(table.threshold))
    table.threshold_normalized = table.threshold * volK / (double(n) * std::log(double(n)));

  // optional multiplicity sweeps on the leading trials
  const long long mt = std::min<long long>(cfg.mult_trials, cfg.trials);
  if (mt > 0 && double(net.size()) <= cfg.mult_net_cap) {
    table.mult_trials_used = mt;
    std::vector<std::vector<coverage::MultiplicityBounds>> mb(
        static_cast<std::size_t>(mt));
    parallel_for(static_cast<std::size_t>(mt), threads, [&](std::size_t i) {
      Stream rng(SeedSpec{cfg.master_seed, std::uint64_t(i)});
      (void)rng.next_open();  // skip the count-coupling draw
      const long long top = tb[i].counts[G - 1];
      Vec coords(static_cast<std::size_t>(top) * n);
      for (long long k = 0; k < top; ++k)
        for (int d = 0; d < n; ++d) coords[k * n + d] = t.side(d) * rng.next_unit();
      auto& per_g = mb[i];
      per_g.resize(G);
      for (long g = 0; g < G; ++g) {
        const PointSet X = detail::prefix_point_set(t, coords, n, tb[i].counts[g]);
        per_g[g] = coverage::max_multiplicity(X, body, net);
      }
    });
    for (long g = 0; g < G; ++g) {
      double lo_sum = 0.0, hi_sum = 0.0;
      for (long long i = 0; i < mt; ++i) {
        lo_sum += mb[i][g].lower;
        hi_sum += mb[i][g].upper;
      }
      table.rows[g].mean_mult_lower = lo_sum / double(mt);
      table.rows[g].mean_mult_upper = hi_sum / double(mt);
    }
  }

  table.trial_columns = {"trial", "top_count", "first_not_uncovered", "first_covered"};
  for (std::size_t i = 0; i < trials; ++i)
    table.trial_log.push_back({double(i), double(tb[i].counts[G - 1]),
                               double(tb[i].b1), double(tb[i].b2)});
  return table;
}

// ---------------------------------------------------------------------------
// Multiplicity profile at a fixed reference point
// ---------------------------------------------------------------------------

struct MultiplicityProfile {
  double intensity = 0.0;
  double lambda = 0.0;  // intensity * vol(K): the reference Poisson mean
  long long trials = 0;
  std::vector<long long> histogram;       // empirical counts of multiplicity k
  std::vector<double> poisson_reference;  // Poisson(lambda) pmf over the same k
  double total_variation = 0.0;
  double mean_density = 0.0, sd_density = 0.0, expected_density = 0.0;
  double mean_multiplicity = 0.0;
  long long mult_trials_used = 0;
  std::vector<long long> mult_upper_histogram;  // max-multiplicity upper bounds
  std::vector<long long> mult_lower_histogram;
  Vec reference_point;
  std::vector<std::string> trial_columns;
  std::vector<Vec> trial_log;  // trial, count, multiplicity, density, lower, upper
};

inline MultiplicityProfile run_multiplicity_profile(const ExperimentConfig& cfg,
                                                    int threads) {
  cfg.validate();
  const Body body = cfg.make_body();
  const Torus t = cfg.make_torus();
  const int n = t.dim();
  const double volK = bodies::volume(body);
  const double volT = t.volume();
  const std::size_t trials = static_cast<std::size_t>(cfg.trials);

  Vec ref(n);
  for (int i = 0; i < n; ++i) ref[i] = 0.5 * t.side(i);

  const long long mt_req = std::min<long long>(cfg.mult_trials, cfg.trials);
  std::optional<ProbeNet> net;
  long long mt = 0;
  if (mt_req > 0) {
    ProbeNet candidate = detail::build_net(cfg);
    if (double(candidate.size()) <= cfg.mult_net_cap) {
      net.emplace(std::move(candidate));
      mt = mt_req;
    }
  }

  std::vector<long long> counts(trials);
  std::vector<int> mult(trials);
  std::vector<int> mlo(trials, -1), mhi(trials, -1);
  parallel_for(trials, threads, [&](std::size_t i) {
    const PointSet X = sampling::sample_ppp(
        t, cfg.intensity, SeedSpec{cfg.master_seed, std::uint64_t(i)},
        cfg.expected_points_cap);
    counts[i] = static_cast<long long>(X.size());
    mult[i] = coverage::multiplicity_at(X, body, ref);
    if (net && static_cast<long long>(i) < mt) {
      const auto b = coverage::max_multiplicity(X, body, *net);
      mlo[i] = b.lower;
      mhi[i] = b.upper;
    }
  });

  MultiplicityProfile rep;
  rep.intensity = cfg.intensity;
  rep.lambda = cfg.intensity * volK;
  rep.trials = cfg.trials;
  rep.expected_density = rep.lambda;
  rep.reference_point = ref;
  rep.mult_trials_used = mt;
  rep.trial_columns = {"trial", "count", "multiplicity", "density",
                       "mult_lower", "mult_upper"};

  int kmax = 0;
  for (std::size_t i = 0; i < trials; ++i) kmax = std::max(kmax, mult[i]);
  rep.histogram.assign(kmax + 1, 0);
  double dsum = 0.0, dsq = 0.0, msum = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    ++rep.histogram[mult[i]];
    const double density = double(counts[i]) * volK / volT;
    dsum += density;
    dsq += density * density;
    msum += mult[i];
    rep.trial_log.push_back({double(i), double(counts[i]), double(mult[i]), density,
                             double(mlo[i]), double(mhi[i])});
  }
  rep.mean_density = dsum / double(trials);
  rep.sd_density = trials > 1 ? std::sqrt(std::max(
                                    0.0, (dsq - dsum * dsum / double(trials)) /
                                             double(trials - 1)))
                              : 0.0;
  rep.mean_multiplicity = msum / double(trials);

  // total variation against Poisson(lambda), extending past the observed
  // support until the reference tail is negligible
  int ktv = kmax;
  if (rep.lambda > 0.0)
    ktv = std::max(ktv, static_cast<int>(rep.lambda + 20.0 * std::sqrt(rep.lambda) + 30.0));
  rep.poisson_reference.resize(ktv + 1);
  double tv = 0.0, ref_mass = 0.0;
  for (int k = 0; k <= ktv; ++k) {
    const double p = std::exp(analytic::log_poisson_pmf(rep.lambda, k));
    rep.poisson_reference[k] = p;
    ref_mass += p;
    const double emp =
        k <= kmax ? double(rep.histogram[k]) / double(trials) : 0.0;
    tv += std::fabs(emp - p);
  }
  tv += std::max(0.0, 1.0 - ref_mass);  // reference mass beyond the window
  rep.total_variation = 0.5 * tv;

  if (mt > 0) {
    int bmax = 0;
    for (long long i = 0; i < mt; ++i) bmax = std::max(bmax, mhi[i]);
    rep.mult_upper_histogram.assign(bmax + 1, 0);
    rep.mult_lower_histogram.assign(bmax + 1, 0);
    for (long long i = 0; i < mt; ++i) {
      ++rep.mult_upper_histogram[mhi[i]];
      ++rep.mult_lower_histogram[mlo[i]];
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Saturation event diagnostics
// ---------------------------------------------------------------------------

struct EventReport {
  double eps = 0.0, mu = 0.0, beta = 0.0;
  double saturation_threshold = 0.0;  // (beta/2) n ln n
  double neighbour_cap = 0.0;         // (xi + 10 delta) n ln n
  long long packing_fine = 0;         // |P_eps|
  long long packing_coarse = 0;       // |P_mu|
  double assignment_max_distance = 0.0;
  long long trials = 0;
  long long e1_count = 0, e2_count = 0, e3_count = 0;
  double e1_lo = 0.0, e1_hi = 0.0, e2_lo = 0.0, e2_hi = 0.0, e3_lo = 0.0, e3_hi = 0.0;
  long long consistency_violations = 0;  // must stay 0
  std::string note;
  std::vector<std::string> trial_columns;
  std::vector<Vec> trial_log;  // trial, count, e1, e2, e3, consistent
};

inline EventReport run_e123_diagnostics(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const Body body = cfg.make_body();
  require_input(body.as<bodies::Ball>() != nullptr,
                "event diagnostics are defined for balls");
  const double r = body.as<bodies::Ball>()->radius;
  const Torus t = cfg.make_torus();
  const int n = t.dim();
  require_input(n >= 2, "event diagnostics need dimension >= 2");
  const double nlogn = double(n) * std::log(double(n));

  const double eps = cfg.eps_override > 0.0 ? cfg.eps_override : r / nlogn;
  const double mu = cfg.mu_override > 0.0
                        ? cfg.mu_override
                        : r * std::pow(double(n), -0.5 - cfg.delta / 4.0);
  require_input(eps < r, "eps must be below the ball radius");
  const double beta = analytic::choose_beta(cfg.delta).value;
  const double threshold = 0.5 * beta * nlogn;
  const double cap = (analytic::solve_xi().value + 10.0 * cfg.delta) * nlogn;

  const auto make_stream = [&](double sep, std::uint64_t which) {
    if (cfg.packing_stream == "grid") {
      const double step = cfg.packing_stream_step > 0.0 ? cfg.packing_stream_step
                                                        : 0.5 * sep;
      double total = 1.0;
      for (int i = 0; i < n; ++i) total *= std::ceil(t.side(i) / step);
      if (total > cfg.net_cardinality_cap) {
        std::ostringstream os;
        os << "packing candidate grid at separation " << sep << " needs " << total
           << " points (cap " << cfg.net_cardinality_cap
           << "); raise eps_override / mu_override or switch packing_stream to "
              "uniform";
        fail_resource(os.str());
      }
      return torus::CandidateStream::grid(step);
    }
    return torus::CandidateStream::seeded_uniform(
        SeedSpec{cfg.master_seed, detail::kMcStreamBase + which},
        cfg.packing_stream_count);
  };

  const PointSet p_fine = torus::greedy_maximal_packing(t, eps, make_stream(eps, 1));
  const PointSet p_coarse = torus::greedy_maximal_packing(t, mu, make_stream(mu, 2));
  const auto phi = torus::nearest_assignment(p_fine, p_coarse);

  const std::size_t trials = static_cast<std::size_t>(cfg.trials);
  std::vector<std::array<int, 4>> flags(trials);  // e1, e2, e3, consistent
  std::vector<long long> counts(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    const PointSet X = sampling::sample_ppp(
        t, cfg.intensity, SeedSpec{cfg.master_seed, std::uint64_t(i)},
        cfg.expected_points_cap);
    counts[i] = static_cast<long long>(X.size());
    std::vector<char> coarse_saturated(p_coarse.size());
    bool e1 = true;
    for (std::size_t p = 0; p < p_coarse.size(); ++p) {
      const bool sat =
          double(X.count_within(p_coarse.point(p), r - eps)) >= threshold;
      coarse_saturated[p] = sat;
      if (!sat) e1 = false;
    }
    bool e2 = true, e3 = true, all_positive = true;
    for (std::size_t z = 0; z < p_fine.size(); ++z) {
      const auto zp = p_fine.point(z);
      if (double(X.count_within(zp, r + eps)) > cap) e2 = false;
      const bool has_near = X.count_within(zp, r - eps) > 0;
      if (!has_near) all_positive = false;
      if (!has_near && coarse_saturated[phi.target_index[z]]) e3 = false;
    }
    const bool consistent = !(e1 && e3) || all_positive;
    flags[i] = {e1 ? 1 : 0, e2 ? 1 : 0, e3 ? 1 : 0, consistent ? 1 : 0};
  });

  EventReport rep;
  rep.eps = eps;
  rep.mu = mu;
  rep.beta = beta;
  rep.saturation_threshold = threshold;
  rep.neighbour_cap = cap;
  rep.packing_fine = static_cast<long long>(p_fine.size());
  rep.packing_coarse = static_cast<long long>(p_coarse.size());
  rep.assignment_max_distance = phi.max_distance;
  rep.trials = cfg.trials;
  rep.note =
      "diagnostic only: the event probabilities carry guarantees only in the "
      "large-n limit";
  rep.trial_columns = {"trial", "count", "e1", "e2", "e3", "consistent"};
  for (std::size_t i = 0; i < trials; ++i) {
    rep.e1_count += flags[i][0];
    rep.e2_count += flags[i][1];
    rep.e3_count += flags[i][2];
    if (!flags[i][3]) ++rep.consistency_violations;
    rep.trial_log.push_back({double(i), double(counts[i]), double(flags[i][0]),
                             double(flags[i][1]), double(flags[i][2]),
                             double(flags[i][3])});
  }
  const auto w1 = detail::wilson_interval(rep.e1_count, rep.trials);
  const auto w2 = detail::wilson_interval(rep.e2_count, rep.trials);
  const auto w3 = detail::wilson_interval(rep.e3_count, rep.trials);
  rep.e1_lo = w1.lo;
  rep.e1_hi = w1.hi;
  rep.e2_lo = w2.lo;
  rep.e2_hi = w2.hi;
  rep.e3_lo = w3.lo;
  rep.e3_hi = w3.hi;
  return rep;
}

// ---------------------------------------------------------------------------
// Second-moment lower-bound experiment
// ---------------------------------------------------------------------------

struct SecondMomentReport {
  long long target_count = 0;
  double intensity = 0.0;
  double rho_eff = 0.0;  // intensity * vol(K), the unit-volume-normalized rate
  double delta_split = 0.0;  // 8 L_K (f_n + log3 rho_eff)
  double isotropic_constant = 0.0;
  // analytic moments from exact pairwise overlap volumes
  double analytic_mean = 0.0;
  double analytic_variance = 0.0;
  double analytic_second_moment = 0.0;
  double sigma1 = 0.0, sigma2 = 0.0;  // pair-sum split at delta_split
  double variance_identity_residual = 0.0;
  double analytic_bound = 0.0;  // Var/E^2
  double suggested_intensity = kNaN;  // ln|P| - n(lnlnln|P| + omega), scaled
  // empirical
  long long trials = 0;
  double empirical_mean = 0.0;
  double empirical_variance = 0.0;
  double empirical_p0 = 0.0;
  double mean_z = 0.0;       // |emp mean - E|/sigma(mean)
  double variance_z = 0.0;   // |emp var - Var|/sigma(var)
  double p0_slack = 0.0;     // bound + 3 binomial sigma - empirical p0
  std::vector<std::string> trial_columns;
  std::vector<Vec> trial_log;  // trial, count, uncovered_targets
};

namespace detail {

struct PairMoments {
  double mean = 0.0;
  double second_moment = 0.0;  // sum over ordered pairs incl. diagonal
  double variance = 0.0;
  double sigma1 = 0.0, sigma2 = 0.0;
  double covariance_form = 0.0;  // independent re-accumulation of Var
};

/// Exact moments of the uncovered-target count from pairwise overlap volumes:
/// E[1_p 1_q] = exp(-2 rho vol(K) + rho vol(K cap (K + p - q))).
inline PairMoments pair_moments(const PointSet& targets, const Body& body,
                                double intensity, double delta_split) {
  const Torus& t = targets.torus();
  const int n = t.dim();
  const double volK = bodies::volume(body);
  const double e1 = std::exp(-intensity * volK);
  const std::size_t m = targets.size();
  PairMoments out;
  out.mean = double(m) * e1;
  Vec d(n);
  double pair_sum = e1 * double(m);  // diagonal: E[1_p^2] = E[1_p]
  double sigma1 = e1 * double(m);    // diagonal pairs are within any Delta
  double cov_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      t.symmetric_diff(targets.point(i), targets.point(j), d);
      const double ov = bodies::overlap_volume(body, d);
      const double pair = std::exp(-2.0 * intensity * volK + intensity * ov);
      pair_sum += 2.0 * pair;
      if (t.distance(targets.point(i), targets.point(j)) <= delta_split)
        sigma1 += 2.0 * pair;
      cov_sum += 2.0 * (pair - e1 * e1);
    }
  }
  out.second_moment = pair_sum;
  out.sigma1 = sigma1;
  out.sigma2 = pair_sum - sigma1;
  out.variance = pair_sum - out.mean * out.mean;
  out.covariance_form = cov_sum + double(m) * e1 * (1.0 - e1);
  return out;
}

}  // namespace detail

inline SecondMomentReport run_second_moment(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const Body body = cfg.make_body();
  const Torus t = cfg.make_torus();
  const int n = t.dim();
  const double volK = bodies::volume(body);
  // unique-lift requirement: any offset with positive overlap must equal its
  // symmetric representative
  require_input(bodies::circumradius(bodies::difference_body(body)) < 0.5 * t.min_side(),
                "difference body K-K must fit within half the least torus side "
                "so pair offsets have a unique overlapping lift");

  torus::CandidateStream stream =
      cfg.target_stream == "grid"
          ? torus::CandidateStream::grid(cfg.target_stream_step > 0.0
                                             ? cfg.target_stream_step
                                             : cfg.separation)
          : torus::CandidateStream::seeded_uniform(
                SeedSpec{cfg.master_seed, detail::kMcStreamBase + 7},
                cfg.target_stream_count);
  const PointSet targets = torus::greedy_maximal_packing(
      t, cfg.separation, stream, cfg.make_separation_norm());
  if (targets.size() < 2)
    fail_input("second-moment run needs at least 2 targets (got " +
               std::to_string(targets.size()) + "); lower the separation");

  SecondMomentReport rep;
  rep.target_count = static_cast<long long>(targets.size());
  rep.intensity = cfg.intensity;
  rep.rho_eff = cfg.intensity * volK;
  rep.isotropic_constant = bodies::isotropic_constant(body);
  require_input(rep.rho_eff > 0.0, "second-moment run needs a positive intensity");
  rep.delta_split = 8.0 * rep.isotropic_constant *
                    (cfg.f_n + std::log(rep.rho_eff) / std::log(3.0));

  const auto pm = detail::pair_moments(targets, body, cfg.intensity,
                                       rep.delta_split);
  rep.analytic_mean = pm.mean;
  rep.analytic_second_moment = pm.second_moment;
  rep.analytic_variance = pm.variance;
  rep.sigma1 = pm.sigma1;
  rep.sigma2 = pm.sigma2;
  rep.variance_identity_residual =
      std::fabs(pm.variance - pm.covariance_form) /
      std::max(1e-300, std::fabs(pm.variance));
  rep.analytic_bound = analytic::second_moment_bound(pm.mean, pm.variance);
  try {
    rep.suggested_intensity =
        analytic::intensity_formulas(n, cfg.delta, volK,
                                     double(targets.size()), cfg.omega)
            .lower_isotropic;
  } catch (const input_error&) {
    rep.suggested_intensity = kNaN;
  }

  const std::size_t trials = static_cast<std::size_t>(cfg.trials);
  std::vector<long long> uncovered(trials), counts(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    const PointSet X = sampling::sample_ppp(
        t, cfg.intensity, SeedSpec{cfg.master_seed, std::uint64_t(i)},
        cfg.expected_points_cap);
    counts[i] = static_cast<long long>(X.size());
    uncovered[i] = coverage::uncovered_count(targets, X, body);
  });

  rep.trials = cfg.trials;
  rep.trial_columns = {"trial", "count", "uncovered_targets"};
  double sum = 0.0;
  long long zeros = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    sum += double(uncovered[i]);
    if (uncovered[i] == 0) ++zeros;
    rep.trial_log.push_back({double(i), double(counts[i]), double(uncovered[i])});
  }
  const double mean = sum / double(trials);
  double m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const double c = double(uncovered[i]) - mean;
    m2 += c * c;
    m4 += c * c * c * c;
  }
  const double var = trials > 1 ? m2 / double(trials - 1) : 0.0;
  m2 /= double(trials);
  m4 /= double(trials);
  rep.empirical_mean = mean;
  rep.empirical_variance = var;
  rep.empirical_p0 = double(zeros) / double(trials);

  const double sd_mean = std::sqrt(std::max(0.0, var / double(trials)));
  rep.mean_z = sd_mean > 0.0 ? std::fabs(mean - pm.mean) / sd_mean : 0.0;
  const double sd_var = std::sqrt(std::max(0.0, (m4 - m2 * m2) / double(trials)));
  rep.variance_z = sd_var > 0.0 ? std::fabs(var - pm.variance) / sd_var : 0.0;
  const double p0 = rep.empirical_p0;
  const double sd_p0 = std::sqrt(std::max(0.0, p0 * (1.0 - p0) / double(trials)));
  rep.p0_slack = rep.analytic_bound + 3.0 * sd_p0 - p0;
  return rep;
}

// ---------------------------------------------------------------------------
// Non-asymptotic inequality ledger
// ---------------------------------------------------------------------------

struct LemmaRow {
  std::string name;
  std::string instances;
  double worst_margin = 0.0;  // bound minus value; >= 0 passes
  bool pass = false;
  std::string detail;
};

struct LemmaSuiteReport {
  std::vector<LemmaRow> rows;
  bool all_pass = false;
};

namespace detail {

inline LemmaRow poisson_upper_row() {
  LemmaRow row;
  row.name = "poisson-upper-tail-bound";
  row.instances = "lambda in {5,20} x sigma in {0.5,1}";
  row.worst_margin = std::numeric_limits<double>::infinity();
  for (double lambda : {5.0, 20.0}) {
    for (double sigma : {0.5, 1.0}) {
      const long long k0 =
          static_cast<long long>(std::ceil((1.0 + sigma) * lambda - 1e-9));
      const double exact = analytic::poisson_upper_tail_exact(lambda, k0);
      const double bound = analytic::poisson_upper_tail(lambda, sigma);
      row.worst_margin = std::min(row.worst_margin, bound - exact);
    }
  }
  row.pass = row.worst_margin >= 0.0;
  return row;
}

inline LemmaRow poisson_lower_row() {
  LemmaRow row;
  row.name = "poisson-lower-tail-bound";
  row.instances = "lambda in {5,20}, sigma = 0.5";
  row.worst_margin = std::numeric_limits<double>::infinity();
  for (double lambda : {5.0, 20.0}) {
    const double sigma = 0.5;
    const long long k1 =
        static_cast<long long>(std::floor((1.0 - sigma) * lambda + 1e-9));
    const double exact = analytic::poisson_lower_tail_exact(lambda, k1);
    const double bound = analytic::poisson_lower_tail(lambda, sigma);
    row.worst_margin = std::min(row.worst_margin, bound - exact);
  }
  row.pass = row.worst_margin >= 0.0;
  return row;
}

inline LemmaRow ball_difference_row() {
  LemmaRow row;
  row.name = "ball-symmetric-difference-bound";
  row.instances = "n in {10,20}, r = 1, d = n^-0.6";
  row.worst_margin = std::numeric_limits<double>::infinity();
  for (int n : {10, 20}) {
    const double d = std::pow(double(n), -0.6);
    const double ball = analytic::nu_exact(n);
    const double overlap = bodies::ball_overlap_volume(n, 1.0, d);
    const double value = ball - overlap;  // vol(B(x1) \ B(x2))
    const double bound = bodies::ball_symmetric_difference_bound(n, 1.0, d);
    row.worst_margin = std::min(row.worst_margin, bound - value);
  }
  row.pass = row.worst_margin >= 0.0;
  return row;
}

inline LemmaRow ball_slice_ratio_row() {
  LemmaRow row;
  row.name = "ball-slice-volume-ratio";
  row.instances = "n in {2..30}, identity residual";
  double worst = 0.0;
  for (int n = 2; n <= 30; ++n) {
    const double lhs = analytic::nu_exact(n - 1) / analytic::nu_exact(n);
    const double rhs = std::exp(std::lgamma(0.5 * n + 1.0) -
                                std::lgamma(0.5 * (n - 1) + 1.0)) /
                       std::sqrt(kPi);
    worst = std::max(worst, std::fabs(lhs - rhs) / rhs);
  }
  row.worst_margin = 1e-12 - worst;  // residual must stay within 1e-12
  row.pass = worst <= 1e-12;
  std::ostringstream os;
  os << "ratio(n=10)/asymptotic = "
     << (analytic::nu_exact(9) / analytic::nu_exact(10)) /
            std::sqrt(10.0 / (2.0 * kPi));
  row.detail = os.str();
  return row;
}

inline LemmaRow cube_small_overlap_row(std::uint64_t master_seed) {
  LemmaRow row;
  row.name = "cube-small-overlap-bound";
  row.instances = "n in {2..8}, 100 offsets with ||x|| >= 4/sqrt(12)";
  row.worst_margin = std::numeric_limits<double>::infinity();
  const double L = 1.0 / std::sqrt(12.0);
  for (int n = 2; n <= 8; ++n) {
    Stream rng(SeedSpec{master_seed, detail::kMcStreamBase + 100 + std::uint64_t(n)});
    Vec x(n);
    for (int sample = 0; sample < 100; ++sample) {
      // random direction, magnitude in [4L, 4L + 1]
      double norm = 0.0;
      for (int i = 0; i < n; ++i) {
        x[i] = rng.next_gauss();
        norm += x[i] * x[i];
      }
      norm = std::sqrt(norm);
      const double target = 4.0 * L + rng.next_unit();
      for (int i = 0; i < n; ++i) x[i] *= target / norm;
      const double overlap = bodies::cube_overlap_volume(1.0, x);
      const double bound = bodies::small_overlap_bound(L, target);
      row.worst_margin = std::min(row.worst_margin, bound - overlap);
    }
  }
  row.pass = row.worst_margin >= 0.0;
  return row;
}

inline LemmaRow borell_quarter_row(std::uint64_t master_seed, long long samples) {
  LemmaRow row;
  row.name = "slab-tail-quarter-bound";
  row.instances = "cube n = 6, slab half-width 2L, MC";
  const int n = 6;
  const double L = 1.0 / std::sqrt(12.0);
  const Body cube = Body::cube(n, 1.0);
  Vec dir(n);
  Stream dir_rng(SeedSpec{master_seed, detail::kMcStreamBase + 200});
  for (int i = 0; i < n; ++i) dir[i] = dir_rng.next_gauss();
  const auto est = bodies::slab_tail_volume_mc(
      cube, bodies::SlabSpec{dir, 2.0 * L}, samples,
      SeedSpec{master_seed, detail::kMcStreamBase + 201});
  row.worst_margin = 0.25 + 3.0 * est.std_error - est.value;
  row.pass = row.worst_margin >= 0.0;
  std::ostringstream os;
  os << "estimate " << est.value << " +- " << est.std_error;
  row.detail = os.str();
  return row;
}

inline LemmaRow borell_exponential_row(std::uint64_t master_seed, long long samples) {
  LemmaRow row;
  row.name = "slab-tail-exponential-bound";
  row.instances = "cube n = 6, t in {1,2,3}, MC";
  row.worst_margin = std::numeric_limits<double>::infinity();
  const int n = 6;
  const double L = 1.0 / std::sqrt(12.0);
  const Body cube = Body::cube(n, 1.0);
  Vec dir(n);
  Stream dir_rng(SeedSpec{master_seed, detail::kMcStreamBase + 210});
  for (int i = 0; i < n; ++i) dir[i] = dir_rng.next_gauss();
  for (int t = 1; t <= 3; ++t) {
    const auto est = bodies::slab_tail_volume_mc(
        cube, bodies::SlabSpec{dir, 2.0 * t * L}, samples,
        SeedSpec{master_seed, detail::kMcStreamBase + 210 + std::uint64_t(t)});
    const double bound = (std::sqrt(3.0) / 4.0) * std::pow(3.0, -0.5 * t);
    row.worst_margin = std::min(row.worst_margin, bound + 3.0 * est.std_error - est.value);
  }
  row.pass = row.worst_margin >= 0.0;
  return row;
}

inline LemmaRow slab_disjoint_row(std::uint64_t master_seed) {
  LemmaRow row;
  row.name = "slab-translate-disjoint";
  row.instances = "cube n = 6, ||x|| = 4L, 1e5 samples";
  const int n = 6;
  const double L = 1.0 / std::sqrt(12.0);
  const Body cube = Body::cube(n, 1.0);
  Vec x(n);
  Stream rng(SeedSpec{master_seed, detail::kMcStreamBase + 220});
  double norm = 0.0;
  for (int i = 0; i < n; ++i) {
    x[i] = rng.next_gauss();
    norm += x[i] * x[i];
  }
  norm = std::sqrt(norm);
  for (int i = 0; i < n; ++i) x[i] *= 4.0 * L / norm;
  const double xnorm = 4.0 * L;
  const double w = 0.5 * xnorm;  // slab S_x(||x||/2)
  long long violations = 0;
  Vec y(n);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 100000; ++s) {
    for (int i = 0; i < n; ++i) y[i] = rng.next_unit() - 0.5;
    const double a = std::fabs(dot(y, x));
    double b = 0.0;
    for (int i = 0; i < n; ++i) b += (y[i] - x[i]) * x[i];
    b = std::fabs(b);
    // y in S and y - x in S would need a < w||x|| and b < w||x||, but
    // a + b >= ||x||^2 = 2w||x||
    if (a < w * xnorm && b < w * xnorm) ++violations;
    worst = std::min(worst, a + b - xnorm * xnorm);
  }
  row.worst_margin = worst;  // >= 0 certifies emptiness on every sample
  row.pass = violations == 0 && worst >= -1e-12;
  std::ostringstream os;
  os << violations << " violations";
  row.detail = os.str();
  return row;
}

inline LemmaRow cube_amgm_row(std::uint64_t master_seed) {
  LemmaRow row;
  row.name = "cube-overlap-amgm-chain";
  row.instances = "n = 9, 1e3 offsets with sum |x_i| >= 2 ln 9";
  const int n = 9;
  const double s_min = 2.0 * std::log(double(n));
  Stream rng(SeedSpec{master_seed, detail::kMcStreamBase + 230});
  Vec x(n);
  const double cap = std::pow(1.0 - s_min / n, n);
  const double inv_n2 = 1.0 / double(n * n);
  double worst = std::numeric_limits<double>::infinity();
  long long produced = 0;
  while (produced < 1000) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] = 1.2 * rng.next_unit();
      sum += x[i];
    }
    if (sum < s_min) continue;
    ++produced;
    const double overlap = bodies::cube_overlap_volume(1.0, x);
    const double mid = std::max(std::pow(1.0 - sum / n, double(n)), 0.0);
    worst = std::min({worst, mid - overlap, cap - mid, inv_n2 - cap});
  }
  row.worst_margin = worst;
  row.pass = worst >= 0.0;
  return row;
}

inline LemmaRow volume_recursion_row() {
  LemmaRow row;
  row.name = "unit-ball-volume-recursion";
  row.instances = "n in {2..30}";
  double worst = 0.0;
  for (int n = 2; n <= 30; ++n) {
    const double lhs = analytic::nu_exact(n);
    const double rhs = 2.0 * kPi / double(n) * analytic::nu_exact(n - 2);
    worst = std::max(worst, std::fabs(lhs - rhs) / rhs);
  }
  row.worst_margin = 1e-12 - worst;
  row.pass = worst <= 1e-12;
  return row;
}

inline LemmaRow crude_exponent_row() {
  LemmaRow row;
  row.name = "poisson-crude-exponent";
  row.instances = "x on a 1e4 grid of [0,1]";
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 10000; ++i) {
    const double x = double(i) / 10000.0;
    const double lhs = x - (1.0 + x) * std::log1p(x);  // log of e^x/(1+x)^(1+x)
    const double rhs = -x * x / 10.0;
    worst = std::min(worst, rhs - lhs);
  }
  row.worst_margin = worst;
  row.pass = worst >= 0.0;
  return row;
}

}  // namespace detail

inline LemmaSuiteReport run_lemma_suite(const ExperimentConfig& cfg) {
  LemmaSuiteReport rep;
  rep.rows.push_back(detail::poisson_upper_row());
  rep.rows.push_back(detail::poisson_lower_row());
  rep.rows.push_back(detail::ball_difference_row());
  rep.rows.push_back(detail::ball_slice_ratio_row());
  rep.rows.push_back(detail::cube_small_overlap_row(cfg.master_seed));
  rep.rows.push_back(detail::borell_quarter_row(cfg.master_seed, cfg.mc_samples));
  rep.rows.push_back(detail::borell_exponential_row(cfg.master_seed, cfg.mc_samples));
  rep.rows.push_back(detail::slab_disjoint_row(cfg.master_seed));
  rep.rows.push_back(detail::cube_amgm_row(cfg.master_seed));
  rep.rows.push_back(detail::volume_recursion_row());
  rep.rows.push_back(detail::crude_exponent_row());
  rep.all_pass = true;
  for (const auto& row : rep.rows)
    if (!row.pass) rep.all_pass = false;
  return rep;
}

}  // namespace toruscover::experiments
