#pragma once

// Point sets on a torus with a cell-list spatial index. Queries are exact
// (the index only prunes, membership is rechecked with the torus metric);
// the unit tests verify equivalence against linear scans.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>

#include "toruscover/common.hpp"
#include "toruscover/torus.hpp"

namespace toruscover::torus {

namespace detail {

/// Dense bucket grid over torus cells. Cell counts per axis are capped so the
/// grid stays small even for large query radii.
class BucketGrid {
 public:
  BucketGrid() = default;

  void build(const Torus& t, std::span<const double> pts, int dim, double cell_edge) {
    dim_ = dim;
    m_.assign(dim, 1);
    cell_.assign(dim, 0.0);
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) {
      long m = static_cast<long>(std::floor(t.side(i) / std::max(cell_edge, 1e-12)));
      m = std::clamp<long>(m, 1, 64);
      while (total * m > (std::size_t{1} << 22)) m = std::max<long>(1, m / 2);
      m_[i] = m;
      cell_[i] = t.side(i) / double(m);
      total *= m;
    }
    offsets_.assign(total + 1, 0);
    const std::size_t count = pts.size() / dim;
    std::vector<std::uint32_t> cell_of(count);
    for (std::size_t p = 0; p < count; ++p) {
      cell_of[p] = cell_index(pts.subspan(p * dim, dim));
      ++offsets_[cell_of[p] + 1];
    }
    for (std::size_t c = 1; c <= total; ++c) offsets_[c] += offsets_[c - 1];
    order_.resize(count);
    std::vector<std::uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t p = 0; p < count; ++p) order_[cursor[cell_of[p]]++] = static_cast<std::uint32_t>(p);
  }

  bool built() const { return !offsets_.empty(); }
  int dim() const { return dim_; }
  long cells(int axis) const { return m_[axis]; }
  double cell_size(int axis) const { return cell_[axis]; }

  std::uint32_t cell_index(std::span<const double> x) const {
    std::uint32_t idx = 0;
    for (int i = 0; i < dim_; ++i) {
      long c = static_cast<long>(x[i] / cell_[i]);
      if (c >= m_[i]) c = m_[i] - 1;
      if (c < 0) c = 0;
      idx = idx * static_cast<std::uint32_t>(m_[i]) + static_cast<std::uint32_t>(c);
    }
    return idx;
  }

  std::span<const std::uint32_t> bucket(std::uint32_t cell) const {
    return {order_.data() + offsets_[cell], order_.data() + offsets_[cell + 1]};
  }

  /// Visit the indices in every cell whose torus box can intersect the closed
  /// ball of radius R around center. Cells may repeat points only if an axis
  /// wraps fully; the per-axis ranges are clamped to avoid that.
  template <class Fn>
  void for_each_candidate(std::span<const double> center, double R, const Fn& fn) const {
    std::vector<long> base(dim_), lo(dim_), hi(dim_), it(dim_);
    for (int i = 0; i < dim_; ++i) {
      long c = static_cast<long>(center[i] / cell_[i]);
      c = std::clamp<long>(c, 0, m_[i] - 1);
      base[i] = c;
      long k = static_cast<long>(std::floor(R / cell_[i])) + 1;
      if (2 * k + 1 >= m_[i]) {
        lo[i] = 0;
        hi[i] = m_[i] - 1;
      } else {
        lo[i] = -k;
        hi[i] = k;
      }
      it[i] = lo[i];
    }
    while (true) {
      std::uint32_t idx = 0;
      for (int i = 0; i < dim_; ++i) {
        long c = (lo[i] == 0 && hi[i] == m_[i] - 1) ? it[i] : (base[i] + it[i]);
        c %= m_[i];
        if (c < 0) c += m_[i];
        idx = idx * static_cast<std::uint32_t>(m_[i]) + static_cast<std::uint32_t>(c);
      }
      for (std::uint32_t p : bucket(idx)) fn(p);
      int axis = dim_ - 1;
      while (axis >= 0 && it[axis] == hi[axis]) {
        it[axis] = lo[axis];
        --axis;
      }
      if (axis < 0) break;
      ++it[axis];
    }
  }

 private:
  int dim_ = 0;
  std::vector<long> m_;
  Vec cell_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> order_;
};

}  // namespace detail

class PointSet {
 public:
  explicit PointSet(Torus t) : torus_(std::move(t)) {}

  const Torus& torus() const { return torus_; }
  int dim() const { return torus_.dim(); }
  std::size_t size() const { return pts_.size() / dim(); }

  std::span<const double> point(std::size_t i) const {
    return {pts_.data() + i * dim(), static_cast<std::size_t>(dim())};
  }
  std::span<const double> raw() const { return pts_; }

  void reserve(std::size_t n) { pts_.reserve(n * dim()); }

  void add(std::span<const double> p) {
    require_input(static_cast<int>(p.size()) == dim(), "point dimension mismatch");
    const std::size_t at = pts_.size();
    pts_.insert(pts_.end(), p.begin(), p.end());
    torus_.reduce_inplace(std::span<double>(pts_.data() + at, p.size()));
    grid_ready_ = false;
  }

  /// Exact count of points with torus distance <= R (closed ball).
  int count_within(std::span<const double> center, double R) const {
    ensure_grid(R);
    int count = 0;
    grid_.for_each_candidate(center, R, [&](std::uint32_t p) {
      if (torus_.distance(center, point(p)) <= R) ++count;
    });
    return count;
  }

  bool exists_within(std::span<const double> center, double R) const {
    ensure_grid(R);
    bool found = false;
    grid_.for_each_candidate(center, R, [&](std::uint32_t p) {
      found = found || torus_.distance(center, point(p)) <= R;
    });
    return found;
  }

  void for_each_within(std::span<const double> center, double R,
                       const std::function<void(std::size_t)>& fn) const {
    ensure_grid(R);
    grid_.for_each_candidate(center, R, [&](std::uint32_t p) {
      if (torus_.distance(center, point(p)) <= R) fn(p);
    });
  }

  /// Index of the nearest point; distance ties break toward the
  /// lexicographically smaller coordinate vector. Empty set -> nullopt.
  /// Expanding-radius search: a candidate found at distance <= R is certified
  /// because every point at distance <= R lives in a visited cell.
  std::optional<std::size_t> nearest(std::span<const double> center) const {
    if (size() == 0) return std::nullopt;
    double rmax2 = 0.0;
    for (double c : torus_.sides()) rmax2 += sq(0.5 * c);
    const double rmax = std::sqrt(rmax2);
    ensure_grid(torus_.min_side() / 8.0);
    double R = torus_.min_side() / 8.0;
    while (true) {
      const double reach = std::min(R, rmax);
      std::size_t best = npos();
      double best_d = 0.0;
      grid_.for_each_candidate(center, reach, [&](std::uint32_t p) {
        const double d = torus_.distance(center, point(p));
        if (best == npos() || d < best_d ||
            (d == best_d && lex_less(point(p), point(best)))) {
          best = p;
          best_d = d;
        }
      });
      if (best != npos() && best_d <= reach) return best;
      if (reach >= rmax) return best == npos() ? std::nullopt : std::optional(best);
      R *= 2.0;
    }
  }

  const detail::BucketGrid& grid(double radius_hint) const {
    ensure_grid(radius_hint);
    return grid_;
  }

 private:
  static std::size_t npos() { return static_cast<std::size_t>(-1); }

  static bool lex_less(std::span<const double> a, std::span<const double> b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  }

  // Built once per point configuration; the ring arithmetic in
  // for_each_candidate keeps any query radius exact, so the edge is a
  // performance hint only.
  void ensure_grid(double R) const {
    if (grid_ready_) return;
    grid_.build(torus_, pts_, dim(), std::max(R, torus_.min_side() / 64.0));
    grid_ready_ = true;
  }

  Torus torus_;
  Vec pts_;
  mutable detail::BucketGrid grid_;
  mutable bool grid_ready_ = false;
};

}  // namespace toruscover::torus
