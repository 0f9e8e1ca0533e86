#pragma once

#include <array>
#include <vector>

#include "gffil/graph.hpp"

namespace gffil::testutil {

// assemble a WeightedGraph from explicit parts (small hand-built cases)
inline WeightedGraph make_graph(int coord_dim, std::vector<int> coords,
                                std::vector<std::array<Vertex, 2>> edges,
                                std::vector<std::uint8_t> frontier,
                                std::vector<double> weights = {}) {
  WeightedGraph g;
  g.coord_dim = coord_dim;
  g.coords = std::move(coords);
  g.edges = std::move(edges);
  g.edge_weights = std::move(weights);
  const std::size_t n = g.coords.size() / coord_dim;
  g.offsets.assign(n + 1, 0);
  for (const auto& e : g.edges) {
    ++g.offsets[e[0] + 1];
    ++g.offsets[e[1] + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] += g.offsets[i];
  g.adj.resize(2 * g.edges.size());
  g.adj_edge.resize(2 * g.edges.size());
  std::vector<std::uint32_t> cur(g.offsets.begin(), g.offsets.end() - 1);
  for (std::uint32_t e = 0; e < g.edges.size(); ++e) {
    const Vertex a = g.edges[e][0], b = g.edges[e][1];
    g.adj[cur[a]] = b;
    g.adj_edge[cur[a]++] = e;
    g.adj[cur[b]] = a;
    g.adj_edge[cur[b]++] = e;
  }
  g.vertex_weights.assign(n, 0.0);
  for (std::uint32_t e = 0; e < g.edges.size(); ++e) {
    const double w = g.edge_weight(e);
    g.vertex_weights[g.edges[e][0]] += w;
    g.vertex_weights[g.edges[e][1]] += w;
  }
  g.frontier = std::move(frontier);
  return g;
}

// path 0-1-...-(n-1) with unit weights, endpoints on the frontier
inline WeightedGraph make_path(int n) {
  std::vector<int> coords(n);
  for (int i = 0; i < n; ++i) coords[i] = i;
  std::vector<std::array<Vertex, 2>> edges(n - 1);
  for (int i = 0; i + 1 < n; ++i) edges[i] = {Vertex(i), Vertex(i + 1)};
  std::vector<std::uint8_t> frontier(n, 0);
  frontier[0] = frontier[n - 1] = 1;
  return make_graph(1, std::move(coords), std::move(edges), std::move(frontier));
}

// star with one center (vertex 0) and `leaves` frontier leaves
inline WeightedGraph make_star(int leaves) {
  std::vector<int> coords(leaves + 1);
  for (int i = 0; i <= leaves; ++i) coords[i] = i;
  std::vector<std::array<Vertex, 2>> edges(leaves);
  for (int i = 0; i < leaves; ++i) edges[i] = {Vertex(0), Vertex(i + 1)};
  std::vector<std::uint8_t> frontier(leaves + 1, 1);
  frontier[0] = 0;
  return make_graph(1, std::move(coords), std::move(edges), std::move(frontier));
}

}  // namespace gffil::testutil
