// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aesfem::mesh {

using NodeId = std::int32_t;
using ElemId = std::int32_t;
using Point = std::array<double, 3>;

/// Malformed input: bad connectivity, non-manifold facets, bad arguments.
class MeshError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A geometric failure such as an inverted or collapsed element.
class GeometryError : public MeshError {
public:
  using MeshError::MeshError;
};

/// Half-facet handle: element id plus local facet id. Facet f of an element
/// is the facet opposite local vertex f.
struct HalfFacetId {
  ElemId element = -1;
  std::int32_t local_facet = 0;

  [[nodiscard]] bool is_boundary() const { return element < 0; }
  friend bool operator==(const HalfFacetId&, const HalfFacetId&) = default;
};

inline constexpr HalfFacetId kNoHalfFacet{};

// Outward-oriented local facets of a positively oriented simplex, facet f
// opposite vertex f.
inline constexpr std::array<std::array<int, 2>, 3> kTriFacets{{{1, 2}, {2, 0}, {0, 1}}};
inline constexpr std::array<std::array<int, 3>, 4> kTetFacets{{{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};

enum class RingFraction { Zero, Half, OneThird, TwoThirds };

/// Ring size k + fraction. Half rings are legal in 2D, thirds in 3D.
struct RingSize {
  int whole = 1;
  RingFraction fraction = RingFraction::Zero;

  [[nodiscard]] double value() const {
    switch (fraction) {
      case RingFraction::Half: return whole + 0.5;
      case RingFraction::OneThird: return whole + 1.0 / 3.0;
      case RingFraction::TwoThirds: return whole + 2.0 / 3.0;
      default: return whole;
    }
  }
  [[nodiscard]] bool legal_for(int dim) const {
    if (whole < 1) return false;
    switch (fraction) {
      case RingFraction::Zero: return true;
      case RingFraction::Half: return dim == 2;
      default: return dim == 3;
    }
  }
  /// Next ring in the finest granularity for the dimension.
  [[nodiscard]] RingSize next(int dim) const {
    if (dim == 2) {
      return fraction == RingFraction::Zero ? RingSize{whole, RingFraction::Half} : RingSize{whole + 1, RingFraction::Zero};
    }
    switch (fraction) {
      case RingFraction::Zero: return {whole, RingFraction::OneThird};
      case RingFraction::OneThird: return {whole, RingFraction::TwoThirds};
      default: return {whole + 1, RingFraction::Zero};
    }
  }
  friend bool operator<(const RingSize& a, const RingSize& b) { return a.value() < b.value(); }
  friend bool operator<=(const RingSize& a, const RingSize& b) { return a.value() <= b.value(); }
  friend bool operator==(const RingSize&, const RingSize&) = default;
};

struct QualityReport {
  double min_angle = 0.0;  // degrees
  double max_angle = 0.0;
  double max_aspect_ratio = 1.0;

  [[nodiscard]] double cot_min_angle() const { return 1.0 / std::tan(min_angle * std::numbers::pi / 180.0); }
};

using Element = std::array<NodeId, 4>;

struct AhfMaps {
  std::vector<std::array<HalfFacetId, 4>> sibhfs;
  std::vector<HalfFacetId> v2hf;
};

namespace detail {

inline double signed_measure(int dim, const Point& a, const Point& b, const Point& c, const Point& d) {
  const Point u{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const Point v{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  if (dim == 2) return 0.5 * (u[0] * v[1] - u[1] * v[0]);
  const Point w{d[0] - a[0], d[1] - a[1], d[2] - a[2]};
  return (u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0]) + u[2] * (v[0] * w[1] - v[1] * w[0])) / 6.0;
}

inline int facets_per_element(int dim) { return dim + 1; }

/// Oriented node ids of facet f of element e (dim entries are meaningful).
inline std::array<NodeId, 3> facet_nodes(int dim, const Element& e, int f) {
  if (dim == 2) return {e[kTriFacets[f][0]], e[kTriFacets[f][1]], -1};
  return {e[kTetFacets[f][0]], e[kTetFacets[f][1]], e[kTetFacets[f][2]]};
}

inline std::array<NodeId, 3> sorted_key(int dim, std::array<NodeId, 3> n) {
  if (dim == 2) {
    if (n[0] > n[1]) std::swap(n[0], n[1]);
  } else {
    std::sort(n.begin(), n.end());
  }
  return n;
}

inline double dist(const Point& a, const Point& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

inline void insert_sorted_unique(std::vector<ElemId>& v, ElemId x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.end() || *it != x) v.insert(it, x);
}

}  // namespace detail

/// Builds sibling half-facets and the vertex-to-half-facet map.
/// Throws MeshError when a facet is shared by more than two elements.
inline AhfMaps build_ahf(int dim, std::span<const Element> elems, std::size_t num_nodes) {
  const int nf = detail::facets_per_element(dim);
  AhfMaps maps;
  maps.sibhfs.assign(elems.size(), {kNoHalfFacet, kNoHalfFacet, kNoHalfFacet, kNoHalfFacet});
  maps.v2hf.assign(num_nodes, kNoHalfFacet);

  struct Entry {
    std::array<NodeId, 3> key;
    HalfFacetId hf;
  };
  std::vector<Entry> entries;
  entries.reserve(elems.size() * nf);
  for (std::size_t e = 0; e < elems.size(); ++e) {
    for (int f = 0; f < nf; ++f) {
      entries.push_back({detail::sorted_key(dim, detail::facet_nodes(dim, elems[e], f)), {static_cast<ElemId>(e), f}});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.key != b.key ? a.key < b.key : (a.hf.element != b.hf.element ? a.hf.element < b.hf.element : a.hf.local_facet < b.hf.local_facet);
  });
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].key == entries[i].key) ++j;
    if (j - i > 2) {
      std::string facet;
      for (int k = 0; k < dim; ++k) facet += (k ? "," : "") + std::to_string(entries[i].key[k]);
      throw MeshError("non-manifold facet {" + facet + "} shared by " + std::to_string(j - i) + " elements");
    }
    if (j - i == 2) {
      const auto a = entries[i].hf;
      const auto b = entries[i + 1].hf;
      maps.sibhfs[a.element][a.local_facet] = b;
      maps.sibhfs[b.element][b.local_facet] = a;
    }
    i = j;
  }

  for (std::size_t e = 0; e < elems.size(); ++e) {
    for (int f = 0; f < nf; ++f) {
      const HalfFacetId hf{static_cast<ElemId>(e), f};
      const bool boundary = maps.sibhfs[e][f].is_boundary();
      const auto nodes = detail::facet_nodes(dim, elems[e], f);
      for (int k = 0; k < dim; ++k) {
        auto& slot = maps.v2hf.at(nodes[k]);
        if (slot.is_boundary()) {
          slot = hf;
        } else if (boundary && !maps.sibhfs[slot.element][slot.local_facet].is_boundary()) {
          slot = hf;
        }
      }
    }
  }
  return maps;
}

/// Simplicial mesh with array-based half-facet adjacency. Immutable once built.
class MeshTopology {
public:
  MeshTopology() = default;

  /// Builds adjacency and verifies every element has positive measure.
  MeshTopology(int dim, std::vector<Point> coords, std::vector<Element> elems)
      : dim_(dim), coords_(std::move(coords)), elems_(std::move(elems)) {
    if (dim_ != 2 && dim_ != 3) throw MeshError("mesh dimension must be 2 or 3, got " + std::to_string(dim_));
    const auto nn = static_cast<NodeId>(coords_.size());
    for (std::size_t e = 0; e < elems_.size(); ++e) {
      for (int k = 0; k <= dim_; ++k) {
        if (elems_[e][k] < 0 || elems_[e][k] >= nn) {
          throw MeshError("element " + std::to_string(e) + " references node " + std::to_string(elems_[e][k]) + " out of range");
        }
      }
      if (dim_ == 2) elems_[e][3] = -1;
    }
    if (dim_ == 2) {
      for (auto& p : coords_) p[2] = 0.0;
    }
    check_positive_measures();
    auto maps = build_ahf(dim_, elems_, coords_.size());
    sibhfs_ = std::move(maps.sibhfs);
    v2hf_ = std::move(maps.v2hf);
  }

  /// Same connectivity and adjacency, new coordinates; rechecks measures.
  [[nodiscard]] MeshTopology with_coords(std::vector<Point> coords) const {
    if (coords.size() != coords_.size()) throw MeshError("coordinate count mismatch");
    MeshTopology m = *this;
    m.coords_ = std::move(coords);
    m.check_positive_measures();
    return m;
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int nodes_per_element() const { return dim_ + 1; }
  [[nodiscard]] std::size_t num_nodes() const { return coords_.size(); }
  [[nodiscard]] std::size_t num_elements() const { return elems_.size(); }
  [[nodiscard]] const std::vector<Point>& coords() const { return coords_; }
  [[nodiscard]] const Point& coord(NodeId v) const { return coords_[v]; }
  [[nodiscard]] const std::vector<Element>& elements() const { return elems_; }
  [[nodiscard]] std::span<const NodeId> element(ElemId e) const { return {elems_[e].data(), static_cast<std::size_t>(dim_ + 1)}; }
  [[nodiscard]] HalfFacetId sibling(HalfFacetId hf) const { return sibhfs_[hf.element][hf.local_facet]; }
  [[nodiscard]] const std::vector<std::array<HalfFacetId, 4>>& sibhfs() const { return sibhfs_; }
  [[nodiscard]] const std::vector<HalfFacetId>& v2hf() const { return v2hf_; }
  [[nodiscard]] std::array<NodeId, 3> facet_nodes(HalfFacetId hf) const { return detail::facet_nodes(dim_, elems_[hf.element], hf.local_facet); }

  [[nodiscard]] double measure(ElemId e) const {
    const auto& el = elems_[e];
    return detail::signed_measure(dim_, coords_[el[0]], coords_[el[1]], coords_[el[2]], dim_ == 3 ? coords_[el[3]] : coords_[el[0]]);
  }

  [[nodiscard]] bool is_referenced(NodeId v) const { return !v2hf_[v].is_boundary(); }

  /// A node is on the boundary if any incident half-facet has no sibling.
  [[nodiscard]] bool is_boundary_node(NodeId v) const {
    const auto hf = v2hf_[v];
    return !hf.is_boundary() && sibling(hf).is_boundary();
  }

  [[nodiscard]] std::vector<bool> boundary_flags() const {
    std::vector<bool> flags(coords_.size(), false);
    for (std::size_t e = 0; e < elems_.size(); ++e) {
      for (int f = 0; f <= dim_; ++f) {
        if (!sibhfs_[e][f].is_boundary()) continue;
        const auto nodes = detail::facet_nodes(dim_, elems_[e], f);
        for (int k = 0; k < dim_; ++k) flags[nodes[k]] = true;
      }
    }
    return flags;
  }

  [[nodiscard]] int local_index(ElemId e, NodeId v) const {
    for (int k = 0; k <= dim_; ++k) {
      if (elems_[e][k] == v) return k;
    }
    return -1;
  }

private:
  void check_positive_measures() const {
    for (std::size_t e = 0; e < elems_.size(); ++e) {
      const double vol = measure(static_cast<ElemId>(e));
      if (!(vol > 0.0)) {
        throw GeometryError("element " + std::to_string(e) + " has nonpositive " + (dim_ == 2 ? "area " : "volume ") + std::to_string(vol));
      }
    }
  }

  int dim_ = 2;
  std::vector<Point> coords_;
  std::vector<Element> elems_;
  std::vector<std::array<HalfFacetId, 4>> sibhfs_;
  std::vector<HalfFacetId> v2hf_;
};

/// Elements incident on `node`, ascending. Walks v2hf and sibling half-facets.
inline std::vector<ElemId> one_ring_elements(const MeshTopology& mesh, NodeId node) {
  if (node < 0 || static_cast<std::size_t>(node) >= mesh.num_nodes()) throw MeshError("node " + std::to_string(node) + " out of range");
  const auto start = mesh.v2hf()[node];
  if (start.is_boundary()) throw MeshError("node " + std::to_string(node) + " is not referenced by any element");
  std::vector<ElemId> result{start.element};
  std::vector<ElemId> stack{start.element};
  while (!stack.empty()) {
    const ElemId e = stack.back();
    stack.pop_back();
    const int lv = mesh.local_index(e, node);
    for (int f = 0; f <= mesh.dim(); ++f) {
      if (f == lv) continue;
      const auto sib = mesh.sibling({e, f});
      if (sib.is_boundary()) continue;
      if (std::find(result.begin(), result.end(), sib.element) == result.end()) {
        result.push_back(sib.element);
        stack.push_back(sib.element);
      }
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

/// Stencil nodes for `node`: the node itself first, then the rest of the
/// ring ascending by id.
inline std::vector<NodeId> ring_neighborhood(const MeshTopology& mesh, NodeId node, RingSize ring) {
  if (!ring.legal_for(mesh.dim())) throw MeshError("ring size " + std::to_string(ring.value()) + " is not legal in " + std::to_string(mesh.dim()) + "D");
  const int npe = mesh.nodes_per_element();

  auto nodes_of = [&](const std::vector<ElemId>& elems) {
    std::vector<NodeId> out;
    out.reserve(elems.size() * npe);
    for (ElemId e : elems) {
      for (NodeId v : mesh.element(e)) out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  auto incident_on = [&](const std::vector<NodeId>& nodes) {
    std::vector<ElemId> out;
    for (NodeId v : nodes) {
      const auto r = one_ring_elements(mesh, v);
      out.insert(out.end(), r.begin(), r.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };

  std::vector<ElemId> elems = one_ring_elements(mesh, node);
  std::vector<NodeId> nodes = nodes_of(elems);
  for (int k = 2; k <= ring.whole; ++k) {
    elems = incident_on(nodes);
    nodes = nodes_of(elems);
  }

  if (ring.fraction != RingFraction::Zero) {
    // Half ring (2D) and 2/3 ring (3D): elements sharing an edge with the
    // ring; 1/3 ring: elements sharing a face.
    const int shared = ring.fraction == RingFraction::OneThird ? 3 : 2;
    const auto candidates = incident_on(nodes);
    std::vector<NodeId> extra;
    for (ElemId e : candidates) {
      if (std::binary_search(elems.begin(), elems.end(), e)) continue;
      int count = 0;
      for (NodeId v : mesh.element(e)) count += std::binary_search(nodes.begin(), nodes.end(), v) ? 1 : 0;
      if (count >= shared) {
        for (NodeId v : mesh.element(e)) extra.push_back(v);
      }
    }
    nodes.insert(nodes.end(), extra.begin(), extra.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  }

  std::vector<NodeId> result{node};
  result.reserve(nodes.size());
  for (NodeId v : nodes) {
    if (v != node) result.push_back(v);
  }
  return result;
}

/// Unit square/cube mesh with n nodes per side. 2D cells are split along the
/// (i,j)-(i+1,j+1) diagonal; 3D cubes use the six-tetrahedron Kuhn split.
inline MeshTopology generate_structured_mesh(int n, int dim) {
  if (n < 2) throw MeshError("structured mesh needs at least 2 nodes per side, got " + std::to_string(n));
  if (dim != 2 && dim != 3) throw MeshError("dimension must be 2 or 3");
  const double h = 1.0 / (n - 1);
  std::vector<Point> coords;
  std::vector<Element> elems;
  if (dim == 2) {
    coords.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) coords.push_back({i * h, j * h, 0.0});
    }
    auto id = [n](int i, int j) { return static_cast<NodeId>(i + j * n); };
    elems.reserve(2 * static_cast<std::size_t>(n - 1) * (n - 1));
    for (int j = 0; j + 1 < n; ++j) {
      for (int i = 0; i + 1 < n; ++i) {
        const NodeId a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
        elems.push_back({a, b, c, -1});
        elems.push_back({a, c, d, -1});
      }
    }
    return MeshTopology(2, std::move(coords), std::move(elems));
  }

  coords.reserve(static_cast<std::size_t>(n) * n * n);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) coords.push_back({i * h, j * h, k * h});
    }
  }
  auto id = [n](int i, int j, int k) { return static_cast<NodeId>(i + n * (j + n * k)); };
  static constexpr std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  elems.reserve(6 * static_cast<std::size_t>(n - 1) * (n - 1) * (n - 1));
  for (int k = 0; k + 1 < n; ++k) {
    for (int j = 0; j + 1 < n; ++j) {
      for (int i = 0; i + 1 < n; ++i) {
        for (const auto& p : perms) {
          std::array<int, 3> c{i, j, k};
          Element el{};
          el[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[p[s]];
            el[s + 1] = id(c[0], c[1], c[2]);
          }
          if (detail::signed_measure(3, coords[el[0]], coords[el[1]], coords[el[2]], coords[el[3]]) < 0) std::swap(el[1], el[2]);
          elems.push_back(el);
        }
      }
    }
  }
  return MeshTopology(3, std::move(coords), std::move(elems));
}

/// Randomly displaces interior nodes by up to `amplitude` times the local
/// shortest incident edge. Deterministic for a given seed.
inline MeshTopology jitter_mesh(const MeshTopology& mesh, double amplitude, std::uint64_t seed = 12345) {
  const auto boundary = mesh.boundary_flags();
  std::vector<double> min_edge(mesh.num_nodes(), std::numeric_limits<double>::infinity());
  for (const auto& el : mesh.elements()) {
    for (int a = 0; a <= mesh.dim(); ++a) {
      for (int b = a + 1; b <= mesh.dim(); ++b) {
        const double len = detail::dist(mesh.coord(el[a]), mesh.coord(el[b]));
        min_edge[el[a]] = std::min(min_edge[el[a]], len);
        min_edge[el[b]] = std::min(min_edge[el[b]], len);
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto coords = mesh.coords();
  for (std::size_t v = 0; v < coords.size(); ++v) {
    Point delta{0.0, 0.0, 0.0};
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int k = 0; k < mesh.dim(); ++k) {
        delta[k] = unit(rng);
        norm2 += delta[k] * delta[k];
      }
    } while (norm2 > 1.0);
    if (boundary[v] || !mesh.is_referenced(static_cast<NodeId>(v))) continue;
    for (int k = 0; k < mesh.dim(); ++k) coords[v][k] += amplitude * min_edge[v] * delta[k];
  }
  return mesh.with_coords(std::move(coords));
}

namespace detail {

inline double angle_between(const Point& u, const Point& v) {
  const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  const Point cr{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  const double cross = std::sqrt(cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]);
  return std::atan2(cross, dot) * 180.0 / std::numbers::pi;
}

inline Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

inline Point cross(const Point& u, const Point& v) {
  return {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
}

inline double norm(const Point& u) { return std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]); }

}  // namespace detail

/// Angle extrema and aspect ratio of a single element.
inline QualityReport element_quality(const MeshTopology& mesh, ElemId e) {
  using namespace detail;
  QualityReport q{180.0, 0.0, 1.0};
  const auto el = mesh.element(e);
  double longest = 0.0, shortest = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= mesh.dim(); ++a) {
    for (int b = a + 1; b <= mesh.dim(); ++b) {
      const double len = dist(mesh.coord(el[a]), mesh.coord(el[b]));
      longest = std::max(longest, len);
      shortest = std::min(shortest, len);
    }
  }
  if (mesh.dim() == 2) {
    for (int k = 0; k < 3; ++k) {
      const auto& p = mesh.coord(el[k]);
      const double ang = angle_between(sub(mesh.coord(el[(k + 1) % 3]), p), sub(mesh.coord(el[(k + 2) % 3]), p));
      q.min_angle = std::min(q.min_angle, ang);
      q.max_angle = std::max(q.max_angle, ang);
    }
    const double area = mesh.measure(e);
    q.max_aspect_ratio = (area > 0.0 && shortest > 0.0) ? longest / shortest : std::numeric_limits<double>::infinity();
    return q;
  }
  // Outward face normals; the dihedral angle between faces f and g is
  // pi minus the angle between their normals.
  std::array<Point, 4> normals;
  double max_area = 0.0;
  for (int f = 0; f < 4; ++f) {
    const auto& t = kTetFacets[f];
    const auto& p0 = mesh.coord(el[t[0]]);
    normals[f] = cross(sub(mesh.coord(el[t[1]]), p0), sub(mesh.coord(el[t[2]]), p0));
    max_area = std::max(max_area, 0.5 * norm(normals[f]));
  }
  for (int f = 0; f < 4; ++f) {
    for (int g = f + 1; g < 4; ++g) {
      const double ang = 180.0 - angle_between(normals[f], normals[g]);
      q.min_angle = std::min(q.min_angle, ang);
      q.max_angle = std::max(q.max_angle, ang);
    }
  }
  const double vol = mesh.measure(e);
  const double min_height = max_area > 0.0 ? 3.0 * vol / max_area : 0.0;
  q.max_aspect_ratio = min_height > 0.0 ? longest / min_height : std::numeric_limits<double>::infinity();
  return q;
}

/// Extrema over all elements: planar angles in 2D, dihedral angles in 3D.
inline QualityReport mesh_quality(const MeshTopology& mesh) {
  QualityReport q{180.0, 0.0, 1.0};
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto qe = element_quality(mesh, static_cast<ElemId>(e));
    q.min_angle = std::min(q.min_angle, qe.min_angle);
    q.max_angle = std::max(q.max_angle, qe.max_angle);
    q.max_aspect_ratio = std::max(q.max_aspect_ratio, qe.max_aspect_ratio);
  }
  return q;
}

/// Orthogonal projection of the highest-local-index vertex of `e` onto the
/// line (2D) or plane (3D) of its opposite facet.
inline Point opposite_facet_projection(const MeshTopology& mesh, ElemId e) {
  using namespace detail;
  const auto el = mesh.element(e);
  const int top = mesh.dim();
  const Point& p = mesh.coord(el[top]);
  const Point& a = mesh.coord(el[0]);
  if (mesh.dim() == 2) {
    const Point t = sub(mesh.coord(el[1]), a);
    const Point w = sub(p, a);
    const double s = (w[0] * t[0] + w[1] * t[1]) / (t[0] * t[0] + t[1] * t[1]);
    return {a[0] + s * t[0], a[1] + s * t[1], 0.0};
  }
  const Point nrm = cross(sub(mesh.coord(el[1]), a), sub(mesh.coord(el[2]), a));
  const Point w = sub(p, a);
  const double s = (w[0] * nrm[0] + w[1] * nrm[1] + w[2] * nrm[2]) / (nrm[0] * nrm[0] + nrm[1] * nrm[1] + nrm[2] * nrm[2]);
  return {p[0] - s * nrm[0], p[1] - s * nrm[1], p[2] - s * nrm[2]};
}

namespace detail {
/// Smallest barycentric coordinate of q (a point in the facet's plane) with
/// respect to the facet opposite the element's last vertex.
inline double facet_min_barycentric(const MeshTopology& mesh, ElemId e, const Point& q) {
  const auto el = mesh.element(e);
  const Point& a = mesh.coord(el[0]);
  const Point& b = mesh.coord(el[1]);
  if (mesh.dim() == 2) {
    const Point t = sub(b, a), w = sub(q, a);
    const double s = (w[0] * t[0] + w[1] * t[1]) / (t[0] * t[0] + t[1] * t[1]);
    return std::min(s, 1.0 - s);
  }
  const Point& c = mesh.coord(el[2]);
  const Point n = cross(sub(b, a), sub(c, a));
  const double nn = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
  auto area = [&](const Point& u, const Point& v, const Point& w) {
    const Point x = cross(sub(v, u), sub(w, u));
    return (x[0] * n[0] + x[1] * n[1] + x[2] * n[2]) / nn;
  };
  return std::min({area(q, b, c), area(a, q, c), area(a, b, q)});
}
}  // namespace detail

/// Moves the highest-local-index vertex of each target element a fraction of
/// the way towards its projection onto the opposite facet. Connectivity is
/// unchanged; throws GeometryError if any element would lose positive measure.
inline MeshTopology degrade_mesh(const MeshTopology& mesh, std::span<const ElemId> targets, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw MeshError("degradation fraction must lie in [0,1)");
  auto coords = mesh.coords();
  for (ElemId e : targets) {
    if (e < 0 || static_cast<std::size_t>(e) >= mesh.num_elements()) throw MeshError("target element " + std::to_string(e) + " out of range");
    const NodeId v = mesh.element(e)[mesh.dim()];
    const Point q = opposite_facet_projection(mesh, e);
    const Point& p = mesh.coord(v);
    for (int k = 0; k < 3; ++k) coords[v][k] = p[k] + fraction * (q[k] - p[k]);
  }
  return mesh.with_coords(std::move(coords));
}

/// Deterministic choice of `count` well-separated interior elements whose
/// moved vertex projects into the middle of the opposite facet and which
/// can be flattened without inverting neighbors.
inline std::vector<ElemId> select_degradation_targets(const MeshTopology& mesh, std::size_t count) {
  const auto boundary = mesh.boundary_flags();
  std::vector<ElemId> chosen;
  std::vector<NodeId> used_nodes;
  const std::size_t ne = mesh.num_elements();
  if (ne == 0 || count == 0) return chosen;
  const std::size_t stride = std::max<std::size_t>(1, ne / (count + 1));
  for (std::size_t start = stride / 2; chosen.size() < count && start < ne; start += stride) {
    for (std::size_t off = 0; off < stride && start + off < ne; ++off) {
      const auto e = static_cast<ElemId>(start + off);
      const auto el = mesh.element(e);
      bool interior = true;
      for (NodeId v : el) interior = interior && !boundary[v];
      if (!interior) continue;
      bool clash = false;
      for (NodeId v : el) clash = clash || std::find(used_nodes.begin(), used_nodes.end(), v) != used_nodes.end();
      if (clash) continue;
      // Projection must land inside the opposite facet, away from its boundary in 2D.
      const Point q = opposite_facet_projection(mesh, e);
      if (detail::facet_min_barycentric(mesh, e, q) < (mesh.dim() == 2 ? 0.25 : 0.02)) continue;
      const std::array<ElemId, 1> probe{e};
      try {
        (void)degrade_mesh(mesh, probe, 0.999999);
      } catch (const GeometryError&) {
        continue;
      }
      chosen.push_back(e);
      for (NodeId v : el) used_nodes.push_back(v);
      break;
    }
  }
  return chosen;
}

}  // namespace aesfem::mesh
