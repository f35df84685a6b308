#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "disco/error.hpp"

namespace disco {

using NodeId = std::uint32_t;
using ExternalId = std::uint64_t;

struct Edge {
  NodeId src;
  NodeId dst;
  double w;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Adjacency entry: the neighbor and the weight of the connecting edge.
struct Arc {
  NodeId to;
  double w;
};

/// Immutable weighted graph with dense 0-based ids.
///
/// Undirected edges are stored once in edges() but appear in the neighbor
/// lists of both endpoints. Neighbor lists are sorted by NodeId. For an
/// undirected graph in() and out() are the same list.
class Graph {
 public:
  Graph() = default;

  /// Validates and builds a graph. `external_ids`, when non-empty, must hold
  /// n distinct ids; otherwise node v keeps external id v.
  static Graph from_edges(std::size_t n, bool directed, std::vector<Edge> edges,
                          std::vector<ExternalId> external_ids = {}) {
    Graph g;
    g.n_ = n;
    g.directed_ = directed;
    if (external_ids.empty()) {
      external_ids.resize(n);
      std::iota(external_ids.begin(), external_ids.end(), ExternalId{0});
    }
    if (external_ids.size() != n) throw Error("external id map size differs from node count");
    g.external_ids_ = std::move(external_ids);
    g.index_.reserve(n);
    for (std::size_t v = 0; v < n; ++v) {
      if (!g.index_.emplace(g.external_ids_[v], static_cast<NodeId>(v)).second) {
        throw Error("duplicate external id " + std::to_string(g.external_ids_[v]));
      }
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const Edge& e = edges[i];
      if (e.src >= n || e.dst >= n) throw Error("edge " + std::to_string(i) + " references a node >= n");
      if (!(e.w >= 0.0 && e.w <= 1.0)) throw Error("edge " + std::to_string(i) + " weight outside [0,1]");
      if (e.src == e.dst) throw Error("self-loop on node " + std::to_string(e.src));
    }
    g.edges_ = std::move(edges);
    g.build_adjacency();
    return g;
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return edges_.size(); }
  bool directed() const noexcept { return directed_; }
  bool empty() const noexcept { return n_ == 0; }

  std::span<const Edge> edges() const noexcept { return edges_; }

  std::span<const Arc> out(NodeId v) const noexcept {
    return {out_arcs_.data() + out_offsets_[v], out_arcs_.data() + out_offsets_[v + 1]};
  }

  std::span<const Arc> in(NodeId v) const noexcept {
    if (!directed_) return out(v);
    return {in_arcs_.data() + in_offsets_[v], in_arcs_.data() + in_offsets_[v + 1]};
  }

  /// Out-degree for directed graphs, degree for undirected ones.
  std::size_t degree(NodeId v) const noexcept { return out_offsets_[v + 1] - out_offsets_[v]; }

  std::size_t in_degree(NodeId v) const noexcept { return in(v).size(); }

  /// True when u is in the neighbor list of v.
  bool has_arc(NodeId v, NodeId u) const noexcept {
    auto arcs = out(v);
    auto it = std::lower_bound(arcs.begin(), arcs.end(), u,
                               [](const Arc& a, NodeId id) { return a.to < id; });
    return it != arcs.end() && it->to == u;
  }

  ExternalId external_id(NodeId v) const noexcept { return external_ids_[v]; }
  std::span<const ExternalId> external_ids() const noexcept { return external_ids_; }

  std::optional<NodeId> find(ExternalId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  void build_adjacency() {
    out_offsets_.assign(n_ + 1, 0);
    for (const Edge& e : edges_) {
      ++out_offsets_[e.src + 1];
      if (!directed_) ++out_offsets_[e.dst + 1];
    }
    std::partial_sum(out_offsets_.begin(), out_offsets_.end(), out_offsets_.begin());
    out_arcs_.resize(out_offsets_[n_]);
    {
      std::vector<std::size_t> cursor(out_offsets_.begin(), out_offsets_.end() - 1);
      for (const Edge& e : edges_) {
        out_arcs_[cursor[e.src]++] = {e.dst, e.w};
        if (!directed_) out_arcs_[cursor[e.dst]++] = {e.src, e.w};
      }
    }
    sort_and_check(out_offsets_, out_arcs_);

    if (directed_) {
      in_offsets_.assign(n_ + 1, 0);
      for (const Edge& e : edges_) ++in_offsets_[e.dst + 1];
      std::partial_sum(in_offsets_.begin(), in_offsets_.end(), in_offsets_.begin());
      in_arcs_.resize(in_offsets_[n_]);
      std::vector<std::size_t> cursor(in_offsets_.begin(), in_offsets_.end() - 1);
      for (const Edge& e : edges_) in_arcs_[cursor[e.dst]++] = {e.src, e.w};
      sort_and_check(in_offsets_, in_arcs_);
    }
  }

  void sort_and_check(const std::vector<std::size_t>& offsets, std::vector<Arc>& arcs) const {
    for (std::size_t v = 0; v < n_; ++v) {
      auto first = arcs.begin() + static_cast<std::ptrdiff_t>(offsets[v]);
      auto last = arcs.begin() + static_cast<std::ptrdiff_t>(offsets[v + 1]);
      std::sort(first, last, [](const Arc& a, const Arc& b) { return a.to < b.to; });
      auto dup = std::adjacent_find(first, last, [](const Arc& a, const Arc& b) { return a.to == b.to; });
      if (dup != last) {
        throw Error("duplicate edge between " + std::to_string(v) + " and " + std::to_string(dup->to));
      }
    }
  }

  std::size_t n_ = 0;
  bool directed_ = false;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<Arc> out_arcs_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<Arc> in_arcs_;
  std::vector<ExternalId> external_ids_;
  std::unordered_map<ExternalId, NodeId> index_;
};

// ---------------------------------------------------------------------------
// Edge-list text format: one edge per line, "u v" or "u v w", '#' comments.

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view tok, T& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Reads an edge list, remapping external ids to dense ids in order of first
/// appearance. Missing weights become `default_weight`.
inline Graph load_edge_list(std::istream& in, bool directed, double default_weight) {
  if (!(default_weight >= 0.0 && default_weight <= 1.0)) throw Error("default weight outside [0,1]");
  std::vector<ExternalId> ids;
  std::unordered_map<ExternalId, NodeId> index;
  std::vector<Edge> edges;
  std::unordered_map<std::uint64_t, std::size_t> seen;  // packed pair -> line

  auto intern = [&](ExternalId x) {
    auto [it, fresh] = index.emplace(x, static_cast<NodeId>(ids.size()));
    if (fresh) ids.push_back(x);
    return it->second;
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto tok = detail::split_ws(line);
    if (tok.size() < 2 || tok.size() > 3) throw ParseError(line_no, "expected 'u v' or 'u v w'");
    ExternalId u = 0, v = 0;
    if (!detail::parse_number(tok[0], u) || !detail::parse_number(tok[1], v)) {
      throw ParseError(line_no, "node ids must be non-negative integers");
    }
    double w = default_weight;
    if (tok.size() == 3 && !detail::parse_number(tok[2], w)) throw ParseError(line_no, "bad weight");
    if (!(w >= 0.0 && w <= 1.0)) throw ParseError(line_no, "weight outside [0,1]");
    if (u == v) throw ParseError(line_no, "self-loop");
    NodeId a = intern(u);
    NodeId b = intern(v);
    NodeId lo = directed ? a : std::min(a, b);
    NodeId hi = directed ? b : std::max(a, b);
    std::uint64_t key = (std::uint64_t{lo} << 32) | hi;
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
      throw ParseError(line_no, "duplicate edge (first seen on line " + std::to_string(it->second) + ")");
    }
    edges.push_back({a, b, w});
  }
  const std::size_t n = ids.size();
  return Graph::from_edges(n, directed, std::move(edges), std::move(ids));
}

inline Graph load_edge_list_file(const std::string& path, bool directed, double default_weight) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load_edge_list(in, directed, default_weight);
}

/// Writes "u v w" lines using external ids. Weights use the shortest decimal
/// that parses back to the same double. Isolated nodes are not representable.
inline void write_edge_list(std::ostream& out, const Graph& g) {
  out << "# nodes " << g.n() << " edges " << g.m() << (g.directed() ? " directed" : " undirected") << '\n';
  for (const Edge& e : g.edges()) {
    out << g.external_id(e.src) << ' ' << g.external_id(e.dst) << ' ' << detail::format_double(e.w) << '\n';
  }
}

/// Subgraph on `nodes` keeping the given parent edges (each must join two
/// listed nodes). New ids follow increasing parent id; external ids carry over.
inline Graph subgraph_with_edges(const Graph& g, std::vector<NodeId> nodes, const std::vector<Edge>& parent_edges) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<NodeId> remap(g.n(), static_cast<NodeId>(-1));
  std::vector<ExternalId> ids(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    remap[nodes[i]] = static_cast<NodeId>(i);
    ids[i] = g.external_id(nodes[i]);
  }
  std::vector<Edge> edges;
  edges.reserve(parent_edges.size());
  for (const Edge& e : parent_edges) {
    if (remap[e.src] == static_cast<NodeId>(-1) || remap[e.dst] == static_cast<NodeId>(-1)) {
      throw Error("subgraph edge leaves the node set");
    }
    edges.push_back({remap[e.src], remap[e.dst], e.w});
  }
  return Graph::from_edges(nodes.size(), g.directed(), std::move(edges), std::move(ids));
}

/// Node-induced subgraph: every edge of g with both endpoints in `nodes`.
inline Graph induced_subgraph(const Graph& g, std::vector<NodeId> nodes) {
  std::vector<char> in_set(g.n(), 0);
  for (NodeId v : nodes) in_set.at(v) = 1;
  std::vector<Edge> kept;
  for (const Edge& e : g.edges()) {
    if (in_set[e.src] && in_set[e.dst]) kept.push_back(e);
  }
  return subgraph_with_edges(g, std::move(nodes), kept);
}

// ---------------------------------------------------------------------------
// Statistics.

inline double average_degree(const Graph& g) {
  if (g.empty()) throw Error("average degree of an empty graph");
  const double m = static_cast<double>(g.m());
  return (g.directed() ? m : 2.0 * m) / static_cast<double>(g.n());
}

/// Right-continuous empirical distribution function of a sample.
class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;

  explicit EmpiricalCdf(std::vector<double> samples) {
    if (samples.empty()) throw Error("empirical CDF of an empty sample");
    std::sort(samples.begin(), samples.end());
    const double total = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
      support_.push_back(samples[i]);
      cumulative_.push_back(static_cast<double>(i + 1) / total);
    }
  }

  bool empty() const noexcept { return support_.empty(); }

  /// Sorted distinct sample values.
  std::span<const double> support() const noexcept { return support_; }

  /// F(x) = fraction of samples <= x.
  double operator()(double x) const noexcept {
    auto it = std::upper_bound(support_.begin(), support_.end(), x);
    if (it == support_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - support_.begin()) - 1];
  }

 private:
  std::vector<double> support_;
  std::vector<double> cumulative_;
};

/// Distribution of degree() over all nodes.
inline EmpiricalCdf degree_distribution(const Graph& g) {
  if (g.empty()) throw Error("degree distribution of an empty graph");
  std::vector<double> deg(g.n());
  for (NodeId v = 0; v < g.n(); ++v) deg[v] = static_cast<double>(g.degree(v));
  return EmpiricalCdf(std::move(deg));
}

/// Local clustering coefficient of each node, ignoring edge direction.
inline std::vector<double> clustering_coefficients(const Graph& g) {
  std::vector<std::vector<NodeId>> nbr(g.n());
  for (NodeId v = 0; v < g.n(); ++v) {
    for (const Arc& a : g.out(v)) nbr[v].push_back(a.to);
    if (g.directed()) {
      for (const Arc& a : g.in(v)) nbr[v].push_back(a.to);
    }
    std::sort(nbr[v].begin(), nbr[v].end());
    nbr[v].erase(std::unique(nbr[v].begin(), nbr[v].end()), nbr[v].end());
  }
  std::vector<double> cc(g.n(), 0.0);
  for (NodeId v = 0; v < g.n(); ++v) {
    const auto& nv = nbr[v];
    const std::size_t d = nv.size();
    if (d < 2) continue;
    std::size_t links = 0;
    for (std::size_t i = 0; i < d; ++i) {
      const auto& ni = nbr[nv[i]];
      for (std::size_t j = i + 1; j < d; ++j) {
        if (std::binary_search(ni.begin(), ni.end(), nv[j])) ++links;
      }
    }
    cc[v] = 2.0 * static_cast<double>(links) / static_cast<double>(d * (d - 1));
  }
  return cc;
}

inline EmpiricalCdf clustering_distribution(const Graph& g) {
  if (g.empty()) throw Error("clustering distribution of an empty graph");
  return EmpiricalCdf(clustering_coefficients(g));
}

}  // namespace disco
