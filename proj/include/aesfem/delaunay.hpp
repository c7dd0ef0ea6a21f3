// SPDX-License-Identifier: Apache-2.0
#pragma once

// Unstructured triangulations of the unit square: Poisson-disk node
// sampling (Bridson) followed by incremental Delaunay triangulation
// (Bowyer-Watson). Deterministic for a given seed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "aesfem/mesh.hpp"

namespace aesfem::mesh {

namespace detail {

inline long double orient2d(const Point& a, const Point& b, const Point& c) {
  return (static_cast<long double>(b[0]) - a[0]) * (static_cast<long double>(c[1]) - a[1]) -
         (static_cast<long double>(b[1]) - a[1]) * (static_cast<long double>(c[0]) - a[0]);
}

/// Positive when d lies strictly inside the circumcircle of ccw (a, b, c).
inline long double incircle(const Point& a, const Point& b, const Point& c, const Point& d) {
  const long double adx = static_cast<long double>(a[0]) - d[0], ady = static_cast<long double>(a[1]) - d[1];
  const long double bdx = static_cast<long double>(b[0]) - d[0], bdy = static_cast<long double>(b[1]) - d[1];
  const long double cdx = static_cast<long double>(c[0]) - d[0], cdy = static_cast<long double>(c[1]) - d[1];
  const long double ad = adx * adx + ady * ady, bd = bdx * bdx + bdy * bdy, cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

/// Boundary nodes at spacing ~r on the square's edges, then interior nodes
/// with pairwise distance >= r.
inline std::vector<Point> poisson_disk_square(double r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double cell = r / std::numbers::sqrt2;
  const int gw = static_cast<int>(std::ceil(1.0 / cell));
  std::vector<int> grid(static_cast<std::size_t>(gw) * gw, -1);
  std::vector<Point> pts;
  auto cell_of = [&](double v) { return std::min(static_cast<int>(v / cell), gw - 1); };
  auto add = [&](const Point& p) {
    pts.push_back(p);
    grid[static_cast<std::size_t>(cell_of(p[0])) * gw + cell_of(p[1])] = static_cast<int>(pts.size() - 1);
  };
  auto far_enough = [&](const Point& p) {
    const int gx = cell_of(p[0]), gy = cell_of(p[1]);
    for (int x = std::max(gx - 2, 0); x <= std::min(gx + 2, gw - 1); ++x) {
      for (int y = std::max(gy - 2, 0); y <= std::min(gy + 2, gw - 1); ++y) {
        const int j = grid[static_cast<std::size_t>(x) * gw + y];
        if (j >= 0 && dist(pts[j], p) < r) return false;
      }
    }
    return true;
  };

  const int per_edge = std::max(2, static_cast<int>(std::ceil(1.0 / r)));
  for (int i = 0; i < per_edge; ++i) {
    const double t = static_cast<double>(i) / per_edge;
    add({t, 0.0, 0.0});
    add({1.0, t, 0.0});
    add({1.0 - t, 1.0, 0.0});
    add({0.0, 1.0 - t, 0.0});
  }
  std::vector<int> active;
  const Point seed_pt{0.5, 0.5, 0.0};
  if (far_enough(seed_pt)) {
    active.push_back(static_cast<int>(pts.size()));
    add(seed_pt);
  }
  constexpr int kTries = 30;
  while (!active.empty()) {
    const auto slot = static_cast<std::size_t>(unit(rng) * active.size()) % active.size();
    const Point base = pts[active[slot]];
    bool found = false;
    for (int k = 0; k < kTries; ++k) {
      const double ang = 2.0 * std::numbers::pi * unit(rng);
      const double d = r * (1.0 + unit(rng));
      const Point p{base[0] + d * std::cos(ang), base[1] + d * std::sin(ang), 0.0};
      if (p[0] <= 0.5 * r || p[0] >= 1.0 - 0.5 * r || p[1] <= 0.5 * r || p[1] >= 1.0 - 0.5 * r) continue;
      if (!far_enough(p)) continue;
      active.push_back(static_cast<int>(pts.size()));
      add(p);
      found = true;
      break;
    }
    if (!found) {
      active[slot] = active.back();
      active.pop_back();
    }
  }
  return pts;
}

/// Bowyer-Watson triangulation of points in the unit square whose first four
/// entries include the corners. Returns ccw triangles.
inline std::vector<Element> delaunay_square(const std::vector<Point>& pts) {
  std::array<NodeId, 4> corner{-1, -1, -1, -1};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    const int cx = p[0] == 0.0 ? 0 : (p[0] == 1.0 ? 1 : -1);
    const int cy = p[1] == 0.0 ? 0 : (p[1] == 1.0 ? 1 : -1);
    if (cx >= 0 && cy >= 0) corner[cx + 2 * cy] = static_cast<NodeId>(i);
  }
  for (NodeId c : corner) {
    if (c < 0) throw MeshError("delaunay_square: corner nodes missing");
  }

  std::vector<std::array<NodeId, 3>> tri;
  std::vector<std::array<std::int32_t, 3>> nbr;  // across the edge opposite vertex k
  std::vector<char> alive;
  auto make = [&](NodeId a, NodeId b, NodeId c) {
    tri.push_back({a, b, c});
    nbr.push_back({-1, -1, -1});
    alive.push_back(1);
    return static_cast<std::int32_t>(tri.size() - 1);
  };
  // corner[cx + 2 cy]; split along the diagonal (0,0)-(1,1).
  const auto t0 = make(corner[0], corner[1], corner[3]);
  const auto t1 = make(corner[0], corner[3], corner[2]);
  for (auto t : {t0, t1}) {
    for (int k = 0; k < 3; ++k) {
      const NodeId a = tri[t][(k + 1) % 3], b = tri[t][(k + 2) % 3];
      nbr[t][k] = -1;
      const auto o = t == t0 ? t1 : t0;
      for (int m = 0; m < 3; ++m) {
        const NodeId c = tri[o][(m + 1) % 3], d = tri[o][(m + 2) % 3];
        if (c == b && d == a) nbr[t][k] = o;
      }
    }
  }

  std::vector<std::int32_t> cavity, stack, start_of(pts.size(), -1), end_of(pts.size(), -1);
  std::vector<char> in_cavity;
  std::int32_t hint = t0;
  for (std::size_t pi = 0; pi < pts.size(); ++pi) {
    const auto p = static_cast<NodeId>(pi);
    if (p == corner[0] || p == corner[1] || p == corner[2] || p == corner[3]) continue;
    const Point& x = pts[pi];
    // Walk to a triangle containing x.
    std::int32_t t = hint;
    for (std::size_t steps = 0;; ++steps) {
      if (steps > 4 * tri.size() + 16) throw MeshError("delaunay_square: point location failed");
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const NodeId a = tri[t][(k + 1) % 3], b = tri[t][(k + 2) % 3];
        if (orient2d(pts[a], pts[b], x) < 0 && nbr[t][k] >= 0) {
          t = nbr[t][k];
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    // Cavity: connected triangles whose circumcircle contains x.
    in_cavity.resize(tri.size(), 0);
    cavity.assign(1, t);
    in_cavity[t] = 1;
    stack.assign(1, t);
    while (!stack.empty()) {
      const auto c = stack.back();
      stack.pop_back();
      for (int k = 0; k < 3; ++k) {
        const auto n = nbr[c][k];
        if (n < 0 || in_cavity[n]) continue;
        if (incircle(pts[tri[n][0]], pts[tri[n][1]], pts[tri[n][2]], x) > 0) {
          in_cavity[n] = 1;
          cavity.push_back(n);
          stack.push_back(n);
        }
      }
    }
    // Fan the cavity boundary to x.
    std::vector<std::int32_t> created;
    for (auto c : cavity) {
      for (int k = 0; k < 3; ++k) {
        const auto n = nbr[c][k];
        if (n >= 0 && in_cavity[n]) continue;
        const NodeId a = tri[c][(k + 1) % 3], b = tri[c][(k + 2) % 3];
        if (orient2d(pts[a], pts[b], x) <= 0) {
          // x lies on this hull edge; no triangle on it.
          if (n >= 0) throw MeshError("delaunay_square: cavity is not star-shaped");
          continue;
        }
        const auto nt = make(a, b, p);
        nbr[nt][2] = n;
        if (n >= 0) {
          for (int m = 0; m < 3; ++m) {
            if (nbr[n][m] == c) nbr[n][m] = nt;
          }
        }
        start_of[a] = nt;
        end_of[b] = nt;
        created.push_back(nt);
      }
    }
    for (auto nt : created) {
      const NodeId a = tri[nt][0], b = tri[nt][1];
      nbr[nt][0] = start_of[b];  // across (b, x): triangle (b, ., x)
      nbr[nt][1] = end_of[a];    // across (x, a): triangle (., a, x)
    }
    for (auto nt : created) {
      start_of[tri[nt][0]] = -1;
      end_of[tri[nt][1]] = -1;
    }
    for (auto c : cavity) {
      alive[c] = 0;
      in_cavity[c] = 0;
    }
    in_cavity.resize(tri.size(), 0);
    if (created.empty()) throw MeshError("delaunay_square: duplicate or degenerate point " + std::to_string(pi));
    hint = created.back();
  }

  std::vector<Element> out;
  for (std::size_t t = 0; t < tri.size(); ++t) {
    if (alive[t]) out.push_back({tri[t][0], tri[t][1], tri[t][2], -1});
  }
  return out;
}

}  // namespace detail

/// Unstructured triangulation of the unit square with roughly
/// `target_nodes` well-spaced nodes (stand-in for a Triangle quality mesh).
inline MeshTopology generate_unstructured_mesh(std::size_t target_nodes, std::uint64_t seed = 2024) {
  if (target_nodes < 16) throw std::invalid_argument("generate_unstructured_mesh: need at least 16 nodes");
  // Maximal Poisson-disk samples in 2D hold about 0.65 / r^2 points per unit area.
  const double r = std::sqrt(0.65 / static_cast<double>(target_nodes));
  auto pts = detail::poisson_disk_square(r, seed);
  auto elems = detail::delaunay_square(pts);
  return MeshTopology(2, std::move(pts), std::move(elems));
}

}  // namespace aesfem::mesh
