#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <unordered_set>
#include <vector>

#include "disco/graph.hpp"
#include "disco/rng.hpp"

namespace disco {

/// Undirected preferential-attachment graph. Starts from a clique on
/// attach+1 nodes; every later node links to `attach` distinct earlier nodes
/// chosen with probability proportional to degree. Node ids follow arrival
/// order, so the first n' nodes form the graph as it was at size n'.
inline Graph preferential_attachment(std::size_t n, std::size_t attach, double weight, std::uint64_t seed) {
  if (attach == 0 || n < attach + 1) throw Error("preferential attachment needs n > attach >= 1");
  Rng rng(seed);
  std::vector<Edge> edges;
  std::vector<NodeId> endpoints;  // node repeated once per incident edge
  for (NodeId u = 0; u <= attach; ++u) {
    for (NodeId v = u + 1; v <= attach; ++v) {
      edges.push_back({u, v, weight});
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  std::vector<NodeId> targets;
  for (NodeId v = static_cast<NodeId>(attach + 1); v < n; ++v) {
    targets.clear();
    while (targets.size() < attach) {
      NodeId t = endpoints[rng.index(endpoints.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    std::sort(targets.begin(), targets.end());
    for (NodeId t : targets) {
      edges.push_back({t, v, weight});
      endpoints.push_back(t);
      endpoints.push_back(v);
    }
  }
  return Graph::from_edges(n, false, std::move(edges));
}

/// The first `count` nodes of g with the edges among them.
inline Graph prefix_subgraph(const Graph& g, std::size_t count) {
  if (count > g.n()) throw Error("prefix larger than graph");
  std::vector<NodeId> nodes(count);
  std::iota(nodes.begin(), nodes.end(), NodeId{0});
  return induced_subgraph(g, std::move(nodes));
}

/// Uniform random graph with exactly m distinct edges (no self-loops).
/// `weight` draws each edge weight from the generator.
inline Graph random_graph(std::size_t n, std::size_t m, bool directed, std::uint64_t seed,
                          const std::function<double(Rng&)>& weight) {
  const std::size_t max_m = directed ? n * (n - 1) : n * (n - 1) / 2;
  if (n < 2 && m > 0) throw Error("random graph needs at least two nodes");
  if (m > max_m) throw Error("too many edges requested for random graph");
  Rng rng(seed);
  std::unordered_set<std::uint64_t> used;
  std::vector<Edge> edges;
  while (edges.size() < m) {
    auto u = static_cast<NodeId>(rng.index(n));
    auto v = static_cast<NodeId>(rng.index(n));
    if (u == v) continue;
    NodeId a = directed ? u : std::min(u, v);
    NodeId b = directed ? v : std::max(u, v);
    if (!used.insert((std::uint64_t{a} << 32) | b).second) continue;
    edges.push_back({u, v, 0.0});
  }
  for (Edge& e : edges) e.w = weight(rng);
  return Graph::from_edges(n, directed, std::move(edges));
}

inline Graph random_graph(std::size_t n, std::size_t m, bool directed, std::uint64_t seed, double weight) {
  return random_graph(n, m, directed, seed, [weight](Rng&) { return weight; });
}

}  // namespace disco
