// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reader/writer for Triangle and TetGen .node/.ele files.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "aesfem/mesh.hpp"

namespace aesfem::mesh {

class ParseError : public MeshError {
public:
  using MeshError::MeshError;
};

namespace detail {

struct TokenLine {
  int line_no = 0;
  std::vector<std::string> tokens;
};

inline std::vector<TokenLine> read_token_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<TokenLine> out;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    TokenLine tl{no, {}};
    std::string tok;
    while (ss >> tok) tl.tokens.push_back(tok);
    if (!tl.tokens.empty()) out.push_back(std::move(tl));
  }
  return out;
}

inline long parse_int(const std::string& tok, const std::filesystem::path& path, int line_no) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path.filename().string() + ":" + std::to_string(line_no) + ": expected integer, got '" + tok + "'");
  }
}

inline double parse_real(const std::string& tok, const std::filesystem::path& path, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path.filename().string() + ":" + std::to_string(line_no) + ": expected number, got '" + tok + "'");
  }
}

inline std::string where(const std::filesystem::path& path, int line_no) {
  return path.filename().string() + ":" + std::to_string(line_no) + ": ";
}

}  // namespace detail

/// Reads a .node/.ele pair. The indexing base (0 or 1) of each file is taken
/// from its first index; the two files must agree.
inline MeshTopology load_mesh(const std::filesystem::path& node_path, const std::filesystem::path& ele_path) {
  using namespace detail;
  const auto nodes = read_token_lines(node_path);
  if (nodes.empty()) throw ParseError(node_path.filename().string() + ": empty file");
  const auto& nh = nodes.front();
  if (nh.tokens.size() < 2) throw ParseError(where(node_path, nh.line_no) + "header needs at least <count> <dim>");
  const long num_nodes = parse_int(nh.tokens[0], node_path, nh.line_no);
  const long dim = parse_int(nh.tokens[1], node_path, nh.line_no);
  const long nattr = nh.tokens.size() > 2 ? parse_int(nh.tokens[2], node_path, nh.line_no) : 0;
  const long nmark = nh.tokens.size() > 3 ? parse_int(nh.tokens[3], node_path, nh.line_no) : 0;
  if (num_nodes < 0 || (dim != 2 && dim != 3) || nattr < 0 || nmark < 0 || nmark > 1) {
    throw ParseError(where(node_path, nh.line_no) + "malformed header");
  }
  if (static_cast<long>(nodes.size()) - 1 < num_nodes) {
    throw ParseError(node_path.filename().string() + ": header declares " + std::to_string(num_nodes) + " nodes but file has " +
                     std::to_string(nodes.size() - 1) + " rows");
  }

  std::vector<Point> coords(num_nodes, Point{0.0, 0.0, 0.0});
  long base = 0;
  for (long i = 0; i < num_nodes; ++i) {
    const auto& row = nodes[i + 1];
    if (static_cast<long>(row.tokens.size()) < 1 + dim) throw ParseError(where(node_path, row.line_no) + "too few columns");
    const long idx = parse_int(row.tokens[0], node_path, row.line_no);
    if (i == 0) {
      if (idx != 0 && idx != 1) throw ParseError(where(node_path, row.line_no) + "first index must be 0 or 1");
      base = idx;
    }
    if (idx != base + i) throw ParseError(where(node_path, row.line_no) + "index " + std::to_string(idx) + " out of sequence (base " + std::to_string(base) + ")");
    for (long k = 0; k < dim; ++k) coords[i][k] = parse_real(row.tokens[1 + k], node_path, row.line_no);
  }

  const auto eles = read_token_lines(ele_path);
  if (eles.empty()) throw ParseError(ele_path.filename().string() + ": empty file");
  const auto& eh = eles.front();
  if (eh.tokens.size() < 2) throw ParseError(where(ele_path, eh.line_no) + "header needs at least <count> <nodes per element>");
  const long num_elems = parse_int(eh.tokens[0], ele_path, eh.line_no);
  const long npe = parse_int(eh.tokens[1], ele_path, eh.line_no);
  if (num_elems < 0 || npe != dim + 1) {
    throw ParseError(where(ele_path, eh.line_no) + "malformed header (expected " + std::to_string(dim + 1) + " nodes per element)");
  }
  if (static_cast<long>(eles.size()) - 1 < num_elems) {
    throw ParseError(ele_path.filename().string() + ": header declares " + std::to_string(num_elems) + " elements but file has " +
                     std::to_string(eles.size() - 1) + " rows");
  }
  std::vector<Element> elems(num_elems, Element{-1, -1, -1, -1});
  for (long i = 0; i < num_elems; ++i) {
    const auto& row = eles[i + 1];
    if (static_cast<long>(row.tokens.size()) < 1 + npe) throw ParseError(where(ele_path, row.line_no) + "too few columns");
    const long idx = parse_int(row.tokens[0], ele_path, row.line_no);
    if (i == 0 && idx != base) {
      throw ParseError(where(ele_path, row.line_no) + "mixed indexing base: .node starts at " + std::to_string(base) + ", .ele at " + std::to_string(idx));
    }
    if (idx != base + i) throw ParseError(where(ele_path, row.line_no) + "index " + std::to_string(idx) + " out of sequence");
    for (long k = 0; k < npe; ++k) {
      const long v = parse_int(row.tokens[1 + k], ele_path, row.line_no) - base;
      if (v < 0 || v >= num_nodes) throw ParseError(where(ele_path, row.line_no) + "node index " + std::to_string(v + base) + " out of range");
      elems[i][k] = static_cast<NodeId>(v);
    }
  }
  return MeshTopology(static_cast<int>(dim), std::move(coords), std::move(elems));
}

/// Loads `<base>.node` and `<base>.ele`.
inline MeshTopology load_mesh(const std::filesystem::path& base) {
  return load_mesh(std::filesystem::path(base.string() + ".node"), std::filesystem::path(base.string() + ".ele"));
}

/// Writes `<base>.node` and `<base>.ele`, 1-based, boundary markers included.
inline void write_mesh(const MeshTopology& mesh, const std::filesystem::path& base) {
  const auto boundary = mesh.boundary_flags();
  std::ofstream node(base.string() + ".node");
  if (!node) throw MeshError("cannot write " + base.string() + ".node");
  node << mesh.num_nodes() << ' ' << mesh.dim() << " 0 1\n";
  node << std::setprecision(17);
  for (std::size_t v = 0; v < mesh.num_nodes(); ++v) {
    node << v + 1;
    for (int k = 0; k < mesh.dim(); ++k) node << ' ' << mesh.coord(static_cast<NodeId>(v))[k];
    node << ' ' << (boundary[v] ? 1 : 0) << '\n';
  }
  std::ofstream ele(base.string() + ".ele");
  if (!ele) throw MeshError("cannot write " + base.string() + ".ele");
  ele << mesh.num_elements() << ' ' << mesh.nodes_per_element() << " 0\n";
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    ele << e + 1;
    for (NodeId v : mesh.element(static_cast<ElemId>(e))) ele << ' ' << v + 1;
    ele << '\n';
  }
}

}  // namespace aesfem::mesh
