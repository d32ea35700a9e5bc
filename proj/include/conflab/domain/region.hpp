#pragma once

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

#include "conflab/domain/grid.hpp"

namespace conflab::domain {

// Radial interval with explicit endpoint membership.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = true;
  bool hi_closed = true;

  bool contains(double r) const {
    const bool above = lo_closed ? r >= lo : r > lo;
    const bool below = hi_closed ? r <= hi : r < hi;
    return above && below;
  }
  bool empty() const { return lo > hi || (lo == hi && !(lo_closed && hi_closed)); }
  bool operator==(const Interval&) const = default;
};

struct RadialUnion {
  std::vector<Interval> parts;  // sorted, disjoint, non-touching
};

struct VoxelMask {
  std::vector<char> mask;
};

class Region {
 public:
  Region(GridPtr grid, RadialUnion u) : grid_(std::move(grid)), rep_(std::move(u)) {}
  Region(GridPtr grid, VoxelMask m) : grid_(std::move(grid)), rep_(std::move(m)) {}

  const GridPtr& grid() const { return grid_; }
  bool is_radial() const { return std::holds_alternative<RadialUnion>(rep_); }
  const RadialUnion& intervals() const { return std::get<RadialUnion>(rep_); }
  const VoxelMask& voxels() const { return std::get<VoxelMask>(rep_); }

  bool contains(Index i) const {
    if (is_radial()) {
      const double r = grid_->r()(i);
      for (const auto& iv : intervals().parts)
        if (iv.contains(r)) return true;
      return false;
    }
    return voxels().mask[static_cast<size_t>(i)] != 0;
  }

  std::vector<char> indicator() const {
    std::vector<char> out(static_cast<size_t>(grid_->size()));
    for (Index i = 0; i < grid_->size(); ++i) out[static_cast<size_t>(i)] = contains(i) ? 1 : 0;
    return out;
  }

  // Fraction of node i's dual cell lying inside the region.
  double cell_fraction(Index i) const {
    if (!is_radial()) return contains(i) ? 1.0 : 0.0;
    const auto& f = grid_->faces();
    const double a = f[static_cast<size_t>(i)], b = f[static_cast<size_t>(i) + 1];
    const int n = grid_->dim();
    double vol = 0.0;
    for (const auto& iv : intervals().parts) {
      const double lo = std::max(a, iv.lo), hi = std::min(b, iv.hi);
      if (hi > lo) vol += std::pow(hi, n) - std::pow(lo, n);
    }
    const double full = std::pow(b, n) - std::pow(a, n);
    return full > 0.0 ? std::min(1.0, vol / full) : (contains(i) ? 1.0 : 0.0);
  }

  // Number of member nodes that are free unknowns (the Dirichlet node never counts).
  Index active_count() const {
    Index c = 0;
    for (Index i = 0; i < grid_->size(); ++i)
      if (i != grid_->dirichlet_node() && contains(i)) ++c;
    return c;
  }

 private:
  GridPtr grid_;
  std::variant<RadialUnion, VoxelMask> rep_;
};

namespace detail {

inline RadialUnion normalize(std::vector<Interval> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](const Interval& i) { return i.empty(); }), v.end());
  std::sort(v.begin(), v.end(), [](const Interval& x, const Interval& y) {
    if (x.lo != y.lo) return x.lo < y.lo;
    return x.lo_closed && !y.lo_closed;
  });
  RadialUnion out;
  for (const auto& iv : v) {
    if (!out.parts.empty()) {
      auto& cur = out.parts.back();
      const bool overlap = iv.lo < cur.hi || (iv.lo == cur.hi && (cur.hi_closed || iv.lo_closed));
      if (overlap) {
        if (iv.hi > cur.hi) {
          cur.hi = iv.hi;
          cur.hi_closed = iv.hi_closed;
        } else if (iv.hi == cur.hi) {
          cur.hi_closed = cur.hi_closed || iv.hi_closed;
        }
        if (iv.lo == cur.lo) cur.lo_closed = cur.lo_closed || iv.lo_closed;
        continue;
      }
    }
    out.parts.push_back(iv);
  }
  return out;
}

inline void check_radius(const Grid& g, double r) {
  if (!g.radial()) throw Error(ErrorCode::InvalidConfig, "radial region on a periodic grid");
  const double tol = 1e-12 * g.r_max();
  if (!(r >= 0.0) || r > g.r_max() + tol)
    throw Error(ErrorCode::OutOfDomain, "radius " + std::to_string(r) + " outside [0, r_max]");
}

inline double periodic_distance(const Grid& g, Index i, const std::vector<double>& c) {
  const double L = g.box_length();
  double d2 = 0.0;
  for (int k = 0; k < g.dim(); ++k) {
    double d = std::fabs(g.coord(i, k) - c[static_cast<size_t>(k)]);
    d = std::fmod(d, L);
    d = std::min(d, L - d);
    d2 += d * d;
  }
  return std::sqrt(d2);
}

template <class Pred>
Region mask_from(const GridPtr& g, Pred pred) {
  VoxelMask m;
  m.mask.resize(static_cast<size_t>(g->size()));
  for (Index i = 0; i < g->size(); ++i) m.mask[static_cast<size_t>(i)] = pred(i) ? 1 : 0;
  return Region(g, std::move(m));
}

inline std::vector<double> default_center(const Grid& g) {
  return std::vector<double>(static_cast<size_t>(g.dim()), 0.5 * g.box_length());
}

}  // namespace detail

inline Region whole(const GridPtr& g) {
  if (g->radial()) return Region(g, RadialUnion{{Interval{0.0, g->r_max(), true, true}}});
  return detail::mask_from(g, [](Index) { return true; });
}

inline Region empty_region(const GridPtr& g) {
  if (g->radial()) return Region(g, RadialUnion{});
  return detail::mask_from(g, [](Index) { return false; });
}

// Radial: [0, r]. Periodic: closed geodesic ball about `center` (box centre by default).
inline Region ball(const GridPtr& g, double r, std::vector<double> center = {}) {
  if (g->radial()) {
    detail::check_radius(*g, r);
    return Region(g, RadialUnion{{Interval{0.0, std::min(r, g->r_max()), true, true}}});
  }
  if (center.empty()) center = detail::default_center(*g);
  return detail::mask_from(g, [&](Index i) { return detail::periodic_distance(*g, i, center) <= r; });
}

// Radial: (a, b]. Periodic: a < dist <= b.
inline Region annulus(const GridPtr& g, double a, double b, std::vector<double> center = {}) {
  if (g->radial()) {
    detail::check_radius(*g, a);
    detail::check_radius(*g, b);
    return Region(g, detail::normalize({Interval{a, std::min(b, g->r_max()), false, true}}));
  }
  if (center.empty()) center = detail::default_center(*g);
  return detail::mask_from(g, [&](Index i) {
    const double d = detail::periodic_distance(*g, i, center);
    return d > a && d <= b;
  });
}

// Radial: (r, r_max]. Periodic: dist > r.
inline Region exterior(const GridPtr& g, double r, std::vector<double> center = {}) {
  if (g->radial()) {
    detail::check_radius(*g, r);
    return Region(g, detail::normalize({Interval{r, g->r_max(), false, true}}));
  }
  if (center.empty()) center = detail::default_center(*g);
  return detail::mask_from(g, [&](Index i) { return detail::periodic_distance(*g, i, center) > r; });
}

inline Region from_mask(const GridPtr& g, std::vector<char> mask) {
  if (static_cast<Index>(mask.size()) != g->size()) throw Error(ErrorCode::InvalidConfig, "mask size mismatch");
  if (g->radial()) throw Error(ErrorCode::InvalidConfig, "voxel masks need a periodic grid");
  return Region(g, VoxelMask{std::move(mask)});
}

inline void check_same_grid(const Region& a, const Region& b) {
  if (a.grid() != b.grid()) throw Error(ErrorCode::InvalidConfig, "regions live on different grids");
}

inline Region complement(const Region& v) {
  const auto& g = v.grid();
  if (!v.is_radial()) {
    auto m = v.voxels().mask;
    for (auto& c : m) c = c ? 0 : 1;
    return Region(g, VoxelMask{std::move(m)});
  }
  std::vector<Interval> gaps;
  double start = 0.0;
  bool start_closed = true;
  for (const auto& iv : v.intervals().parts) {
    gaps.push_back(Interval{start, iv.lo, start_closed, !iv.lo_closed});
    start = iv.hi;
    start_closed = !iv.hi_closed;
  }
  gaps.push_back(Interval{start, g->r_max(), start_closed, true});
  return Region(g, detail::normalize(std::move(gaps)));
}

inline Region intersect(const Region& a, const Region& b) {
  check_same_grid(a, b);
  if (!a.is_radial()) {
    auto m = a.voxels().mask;
    const auto& mb = b.voxels().mask;
    for (size_t i = 0; i < m.size(); ++i) m[i] = (m[i] && mb[i]) ? 1 : 0;
    return Region(a.grid(), VoxelMask{std::move(m)});
  }
  std::vector<Interval> out;
  for (const auto& x : a.intervals().parts) {
    for (const auto& y : b.intervals().parts) {
      Interval z;
      if (x.lo > y.lo) { z.lo = x.lo; z.lo_closed = x.lo_closed; }
      else if (y.lo > x.lo) { z.lo = y.lo; z.lo_closed = y.lo_closed; }
      else { z.lo = x.lo; z.lo_closed = x.lo_closed && y.lo_closed; }
      if (x.hi < y.hi) { z.hi = x.hi; z.hi_closed = x.hi_closed; }
      else if (y.hi < x.hi) { z.hi = y.hi; z.hi_closed = y.hi_closed; }
      else { z.hi = x.hi; z.hi_closed = x.hi_closed && y.hi_closed; }
      out.push_back(z);
    }
  }
  return Region(a.grid(), detail::normalize(std::move(out)));
}

inline Region unite(const Region& a, const Region& b) {
  check_same_grid(a, b);
  if (!a.is_radial()) {
    auto m = a.voxels().mask;
    const auto& mb = b.voxels().mask;
    for (size_t i = 0; i < m.size(); ++i) m[i] = (m[i] || mb[i]) ? 1 : 0;
    return Region(a.grid(), VoxelMask{std::move(m)});
  }
  auto parts = a.intervals().parts;
  parts.insert(parts.end(), b.intervals().parts.begin(), b.intervals().parts.end());
  return Region(a.grid(), detail::normalize(std::move(parts)));
}

inline Region subtract(const Region& a, const Region& b) { return intersect(a, complement(b)); }

inline bool same_nodes(const Region& a, const Region& b) { return a.indicator() == b.indicator(); }

}  // namespace conflab::domain
