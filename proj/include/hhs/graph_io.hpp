#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "hhs/graph.hpp"

namespace hhs {

/// Writes `v u` per edge, u < v order, sorted. A header comment records the
/// vertex count so isolated vertices survive a round trip.
inline void write_edge_list(std::ostream& out, const MetricGraph& g) {
  out << "# vertices " << g.vertex_count() << "\n";
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

/// Reads the edge-list format. `#` starts a comment; the optional
/// `# vertices N` header fixes the vertex count, otherwise it is one more
/// than the largest id seen.
inline MetricGraph read_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::size_t declared = 0;
  bool have_declared = false;
  std::size_t max_id = 0;
  bool any = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) {
      std::istringstream header(line.substr(hash + 1));
      std::string key;
      std::size_t count;
      if (header >> key >> count && key == "vertices") {
        declared = count;
        have_declared = true;
      }
      line.resize(hash);
    }
    std::istringstream fields(line);
    long long u, v;
    if (!(fields >> u)) continue;
    if (!(fields >> v) || u < 0 || v < 0) {
      throw Error(ErrorKind::InvalidArgument, "malformed edge on line " + std::to_string(line_no));
    }
    edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
    max_id = std::max<std::size_t>(max_id, static_cast<std::size_t>(std::max(u, v)));
    any = true;
  }
  std::size_t n = have_declared ? declared : (any ? max_id + 1 : 0);
  return MetricGraph::from_edges(n, std::move(edges));
}

/// DOT export. Edges listed in `highlighted` are drawn dashed and coloured,
/// which is how cone edges are told apart from base edges.
inline void write_dot(std::ostream& out, const MetricGraph& g, const std::set<Edge>& highlighted = {},
                      const std::string& name = "G") {
  out << "graph " << name << " {\n";
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    out << "  " << v;
    if (g.has_labels()) out << " [label=\"" << (g.label(v).empty() ? "1" : g.label(v)) << "\"]";
    out << ";\n";
  }
  for (auto e : g.edges()) {
    out << "  " << e.first << " -- " << e.second;
    if (highlighted.count(e)) out << " [style=dashed, color=red]";
    out << ";\n";
  }
  out << "}\n";
}

}  // namespace hhs
