// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "aesfem/mesh.hpp"
#include "aesfem/wls.hpp"

namespace aesfem {

struct WlsConfig {
  int degree = 2;
  double weight_eps = 0.01;
  double rank_eps = 1e-4;
  double max_ring = 3.5;
};

/// WLS stencil of one mesh node: ring nodes (center first) and the factored
/// Vandermonde system in coordinates relative to the center.
struct NodeStencil {
  std::vector<mesh::NodeId> nodes;
  mesh::RingSize ring;
  mesh::Point center{};
  wls::GvmFactor gvm;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }
  [[nodiscard]] wls::Point local(const mesh::Point& x) const { return {x[0] - center[0], x[1] - center[1], x[2] - center[2]}; }
};

/// Starts from the 1-ring and grows by half rings (2D) or third rings (3D)
/// until the stencil has at least as many points as basis terms and full
/// numerical rank. Past `max_ring` the last stencil is kept with its
/// truncated rank.
inline NodeStencil build_node_stencil(const mesh::MeshTopology& m, mesh::NodeId node, const WlsConfig& cfg) {
  const std::size_t n_terms = wls::MonomialBasis::term_count(m.dim(), cfg.degree);
  mesh::RingSize ring{1, mesh::RingFraction::Zero};
  NodeStencil s;
  s.center = m.coord(node);
  bool have = false;
  while (true) {
    auto nodes = mesh::ring_neighborhood(m, node, ring);
    if (nodes.size() >= 2) {
      std::vector<wls::Point> pts(nodes.size());
      std::vector<std::int64_t> ids(nodes.begin(), nodes.end());
      for (std::size_t k = 0; k < nodes.size(); ++k) pts[k] = m.coord(nodes[k]);
      const auto local = wls::make_local_stencil(m.dim(), pts, cfg.weight_eps, ids);
      s.gvm = wls::build_gvm(local, cfg.degree, cfg.rank_eps);
      s.nodes = std::move(nodes);
      s.ring = ring;
      have = true;
      if (s.nodes.size() >= n_terms && s.gvm.full_rank()) return s;
    }
    const auto next = ring.next(m.dim());
    if (next.value() > cfg.max_ring + 1e-12) break;
    ring = next;
  }
  if (!have) throw wls::StencilError("node " + std::to_string(node) + ": degenerate stencil up to ring " + std::to_string(cfg.max_ring));
  return s;
}

}  // namespace aesfem
