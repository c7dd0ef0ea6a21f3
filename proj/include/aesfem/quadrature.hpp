// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aesfem/mesh.hpp"

namespace aesfem::quad {

using mesh::Point;

enum class Purpose { Stiffness, Load, HighOrder };

/// Points in barycentric coordinates (dim+1 entries, last unused in 2D);
/// weights sum to the reference simplex measure (1/2 or 1/6).
struct QuadratureRule {
  int dim = 2;
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return weights.size(); }
};

inline double reference_measure(int dim) { return dim == 2 ? 0.5 : 1.0 / 6.0; }

namespace detail {
// Collapsed (Duffy) tensor Gauss rule, 3 points per axis: exact to degree 4
// on triangles and degree 3 on tetrahedra.
inline QuadratureRule collapsed_gauss(int dim) {
  const double s = std::sqrt(0.15);
  const std::array<double, 3> x{0.5 - s, 0.5, 0.5 + s};
  const std::array<double, 3> w{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  QuadratureRule r;
  r.dim = dim;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (dim == 2) {
        const double px = x[i], py = x[j] * (1.0 - x[i]);
        r.points.push_back({1.0 - px - py, px, py, 0.0});
        r.weights.push_back(w[i] * w[j] * (1.0 - x[i]));
        continue;
      }
      for (int k = 0; k < 3; ++k) {
        const double px = x[i], py = x[j] * (1.0 - x[i]), pz = x[k] * (1.0 - x[i]) * (1.0 - x[j]);
        r.points.push_back({1.0 - px - py - pz, px, py, pz});
        r.weights.push_back(w[i] * w[j] * w[k] * (1.0 - x[i]) * (1.0 - x[i]) * (1.0 - x[j]));
      }
    }
  }
  return r;
}
}  // namespace detail

/// 2D: centroid (stiffness), 3 edge midpoints (load).
/// 3D: centroid (stiffness), 4-point degree-2 rule (load).
inline QuadratureRule quadrature_rule(int dim, Purpose purpose) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("quadrature dimension must be 2 or 3");
  if (purpose == Purpose::HighOrder) return detail::collapsed_gauss(dim);
  QuadratureRule r;
  r.dim = dim;
  const double vol = reference_measure(dim);
  if (purpose == Purpose::Stiffness) {
    r.points.push_back(dim == 2 ? std::array<double, 4>{1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0} : std::array<double, 4>{0.25, 0.25, 0.25, 0.25});
    r.weights.push_back(vol);
    return r;
  }
  if (dim == 2) {
    r.points = {{0.0, 0.5, 0.5, 0.0}, {0.5, 0.0, 0.5, 0.0}, {0.5, 0.5, 0.0, 0.0}};
    r.weights.assign(3, vol / 3.0);
    return r;
  }
  constexpr double a = 0.5854101966249685;
  constexpr double b = 0.1381966011250105;
  r.points = {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}};
  r.weights.assign(4, vol / 4.0);
  return r;
}

/// Affine simplex: measure and constant gradients of the hat functions.
struct ElementGeometry {
  int dim = 2;
  double measure = 0.0;
  std::array<Point, 4> vertices{};
  std::array<Point, 4> hat_gradients{};

  [[nodiscard]] Point point(const std::array<double, 4>& bary) const {
    Point p{0.0, 0.0, 0.0};
    for (int a = 0; a <= dim; ++a) {
      for (int c = 0; c < 3; ++c) p[c] += bary[a] * vertices[a][c];
    }
    return p;
  }
  /// Integration weight for a reference-rule weight.
  [[nodiscard]] double scale() const { return measure / reference_measure(dim); }
};

inline ElementGeometry element_geometry(const mesh::MeshTopology& m, mesh::ElemId e) {
  ElementGeometry g;
  g.dim = m.dim();
  const auto el = m.element(e);
  for (int a = 0; a <= g.dim; ++a) g.vertices[a] = m.coord(el[a]);
  const auto& v = g.vertices;
  if (g.dim == 2) {
    const double j00 = v[1][0] - v[0][0], j01 = v[2][0] - v[0][0];
    const double j10 = v[1][1] - v[0][1], j11 = v[2][1] - v[0][1];
    const double det = j00 * j11 - j01 * j10;
    if (!(det > 0.0)) throw mesh::GeometryError("element " + std::to_string(e) + " is inverted or degenerate");
    g.measure = 0.5 * det;
    // Rows of J^-1 are the gradients of barycentrics 1 and 2.
    g.hat_gradients[1] = {j11 / det, -j01 / det, 0.0};
    g.hat_gradients[2] = {-j10 / det, j00 / det, 0.0};
  } else {
    Eigen::Matrix3d j;
    for (int c = 0; c < 3; ++c) {
      for (int a = 0; a < 3; ++a) j(c, a) = v[a + 1][c] - v[0][c];
    }
    const double det = j.determinant();
    if (!(det > 0.0)) throw mesh::GeometryError("element " + std::to_string(e) + " is inverted or degenerate");
    g.measure = det / 6.0;
    const Eigen::Matrix3d inv = j.inverse();
    for (int a = 0; a < 3; ++a) g.hat_gradients[a + 1] = {inv(a, 0), inv(a, 1), inv(a, 2)};
  }
  for (int c = 0; c < 3; ++c) {
    g.hat_gradients[0][c] = 0.0;
    for (int a = 1; a <= g.dim; ++a) g.hat_gradients[0][c] -= g.hat_gradients[a][c];
  }
  return g;
}

}  // namespace aesfem::quad
