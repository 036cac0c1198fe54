#pragma once

// Probe nets (implicit axis-aligned grids with a certified covering radius),
// greedy maximal packings, and nearest-point assignments between point sets.

#include <cmath>
#include <optional>
#include <sstream>

#include "toruscover/pointset.hpp"
#include "toruscover/rng.hpp"
#include "toruscover/torus.hpp"

namespace toruscover::torus {

enum class NetNorm { l2, linf };

/// Metric used for greedy packing separation tests.
enum class SeparationNorm { l2, l1 };

/// Axis-aligned grid net stored implicitly (dims + spacings). Every torus
/// point is within the covering radius of some net point in the chosen norm.
class ProbeNet {
 public:
  ProbeNet(Torus t, std::vector<long> dims, NetNorm norm)
      : torus_(std::move(t)), dims_(std::move(dims)), norm_(norm) {
    spacing_.resize(dims_.size());
    double r2 = 0.0, rinf = 0.0;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      spacing_[i] = torus_.side(i) / double(dims_[i]);
      r2 += sq(0.5 * spacing_[i]);
      rinf = std::max(rinf, 0.5 * spacing_[i]);
    }
    radius_ = norm_ == NetNorm::l2 ? std::sqrt(r2) : rinf;
  }

  const Torus& torus() const { return torus_; }
  int dim() const { return torus_.dim(); }
  NetNorm norm() const { return norm_; }
  double covering_radius() const { return radius_; }
  const std::vector<long>& dims() const { return dims_; }
  double spacing(int axis) const { return spacing_[axis]; }

  long long size() const {
    long long n = 1;
    for (long d : dims_) n *= d;
    return n;
  }

  /// Net point by lexicographic index (last axis fastest).
  void point(long long idx, std::span<double> out) const {
    for (int i = dim() - 1; i >= 0; --i) {
      out[i] = double(idx % dims_[i]) * spacing_[i];
      idx /= dims_[i];
    }
  }

  /// Materialized copy for export; refuses to blow memory.
  PointSet materialize(long long cap = 20'000'000) const {
    if (size() > cap) {
      std::ostringstream os;
      os << "materializing this net needs " << size() << " points; cap is " << cap;
      fail_resource(os.str());
    }
    PointSet ps(torus_);
    ps.reserve(static_cast<std::size_t>(size()));
    Vec p(dim());
    for (long long i = 0; i < size(); ++i) {
      point(i, p);
      ps.add(p);
    }
    return ps;
  }

 private:
  Torus torus_;
  std::vector<long> dims_;
  Vec spacing_;
  NetNorm norm_;
  double radius_ = 0.0;
};

/// Grid net with covering radius <= h: spacing at most 2h/sqrt(n) for the
/// euclidean norm, 2h for the sup norm.
inline ProbeNet build_probe_net(const Torus& t, double h, NetNorm norm,
                                long long cardinality_cap = 100'000'000) {
  require_input(finite_positive(h), "net radius h must be finite and positive");
  const int n = t.dim();
  const double target =
      norm == NetNorm::l2 ? 2.0 * h / std::sqrt(double(n)) : 2.0 * h;
  std::vector<long> dims(n);
  double total = 1.0;
  for (int i = 0; i < n; ++i) {
    dims[i] = std::max<long>(1, static_cast<long>(std::ceil(t.side(i) / target)));
    total *= double(dims[i]);
  }
  if (total > double(cardinality_cap)) {
    std::ostringstream os;
    os << "probe net at h=" << h << " needs " << total
       << " points; the cardinality cap is " << cardinality_cap
       << " (raise the cap or coarsen h)";
    fail_resource(os.str());
  }
  return ProbeNet(t, std::move(dims), norm);
}

/// Candidate source for greedy packings: a lexicographic grid sweep or a
/// fixed count of seeded uniform points.
struct CandidateStream {
  enum class Kind { grid, seeded_uniform } kind = Kind::grid;
  double grid_step = 0.0;       // grid: per-axis spacing target
  SeedSpec seed{};              // seeded_uniform
  long long count = 0;          // seeded_uniform
  static CandidateStream grid(double step) {
    CandidateStream s;
    s.kind = Kind::grid;
    s.grid_step = step;
    return s;
  }
  static CandidateStream seeded_uniform(SeedSpec seed, long long count) {
    CandidateStream s;
    s.kind = Kind::seeded_uniform;
    s.seed = seed;
    s.count = count;
    return s;
  }
};

/// First-fit greedy packing: accept a candidate iff its torus distance to
/// every accepted point exceeds `separation` (so closed balls of radius
/// separation/2 around accepted points are pairwise disjoint). Every
/// rejected candidate is within `separation` of an accepted point; with a
/// grid stream of step <= separation/(2 sqrt n) the result is maximal as a
/// packing of the torus itself. With norm = l1 the separation is measured in
/// the quotient l1 metric (closed l1 balls of radius separation/2 disjoint);
/// the l2 candidate search stays exact because l2 <= l1.
inline PointSet greedy_maximal_packing(const Torus& t, double separation,
                                       const CandidateStream& stream,
                                       SeparationNorm norm = SeparationNorm::l2) {
  require_input(finite_positive(separation), "separation must be finite and positive");
  PointSet accepted(t);
  const int n = t.dim();
  Vec cand(n);
  const auto close_l1 = [&](std::span<const double> c) {
    bool found = false;
    accepted.for_each_within(c, separation, [&](std::size_t p) {
      if (t.distance_l1(c, accepted.point(p)) <= separation) found = true;
    });
    return found;
  };
  const auto try_accept = [&](std::span<const double> c) {
    const bool blocked = norm == SeparationNorm::l2
                             ? accepted.exists_within(c, separation)
                             : close_l1(c);
    if (!blocked) accepted.add(c);
  };
  if (stream.kind == CandidateStream::Kind::grid) {
    require_input(finite_positive(stream.grid_step), "grid step must be positive");
    std::vector<long> dims(n);
    double total = 1.0;
    for (int i = 0; i < n; ++i) {
      dims[i] = std::max<long>(1, static_cast<long>(std::ceil(t.side(i) / stream.grid_step)));
      total *= double(dims[i]);
    }
    if (total > 2e9) fail_resource("greedy packing grid stream exceeds 2e9 candidates");
    std::vector<long> it(n, 0);
    while (true) {
      for (int i = 0; i < n; ++i) cand[i] = double(it[i]) * (t.side(i) / double(dims[i]));
      try_accept(cand);
      int axis = n - 1;
      while (axis >= 0 && it[axis] == dims[axis] - 1) {
        it[axis] = 0;
        --axis;
      }
      if (axis < 0) break;
      ++it[axis];
    }
  } else {
    require_input(stream.count > 0, "seeded uniform stream needs a positive count");
    Stream rng(stream.seed);
    for (long long k = 0; k < stream.count; ++k) {
      for (int i = 0; i < n; ++i) cand[i] = t.side(i) * rng.next_unit();
      try_accept(cand);
    }
  }
  return accepted;
}

struct NearestAssignment {
  std::vector<std::size_t> target_index;  // for each `from` point
  double max_distance = 0.0;
};

/// Map each point of `from` to its nearest point of `to` (torus metric,
/// lexicographic tie-break) and report the worst distance.
inline NearestAssignment nearest_assignment(const PointSet& from, const PointSet& to) {
  require_input(from.torus().same_shape(to.torus()), "point sets live on different tori");
  require_input(to.size() > 0, "nearest assignment needs a nonempty target set");
  NearestAssignment out;
  out.target_index.resize(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    const auto j = to.nearest(from.point(i));
    out.target_index[i] = *j;
    out.max_distance =
        std::max(out.max_distance, from.torus().distance(from.point(i), to.point(*j)));
  }
  return out;
}

}  // namespace toruscover::torus
