#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "disco/graph.hpp"
#include "disco/rng.hpp"

namespace disco {

enum class SampleMethod { BFS, SRW, RWF, ISRW, SB };

inline std::string_view to_string(SampleMethod m) {
  switch (m) {
    case SampleMethod::BFS: return "bfs";
    case SampleMethod::SRW: return "srw";
    case SampleMethod::RWF: return "rwf";
    case SampleMethod::ISRW: return "isrw";
    case SampleMethod::SB: return "sb";
  }
  return "?";
}

inline SampleMethod parse_sample_method(std::string_view s) {
  for (auto m : {SampleMethod::BFS, SampleMethod::SRW, SampleMethod::RWF, SampleMethod::ISRW, SampleMethod::SB}) {
    if (s == to_string(m)) return m;
  }
  if (s == "snowball") return SampleMethod::SB;
  throw Error("unknown sampler '" + std::string(s) + "'");
}

struct SampleSpec {
  SampleMethod method = SampleMethod::BFS;
  double fraction = 0.1;
  double flyback_p = 0.15;          // RWF only
  std::size_t snowball_limit = 3;   // SB only
  std::uint64_t rng_seed = 0;
  std::optional<NodeId> root;       // first root; random when empty

  void validate() const {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw Error("sample fraction must lie in (0,1]");
    if (!(flyback_p >= 0.0 && flyback_p < 1.0)) throw Error("flyback probability must lie in [0,1)");
    if (snowball_limit < 1) throw Error("snowball limit must be >= 1");
  }
};

/// Walk-based samplers jump to a fresh node after this many steps (times n)
/// without discovering anything new.
inline constexpr std::size_t kStallFactor = 100;

namespace detail {

// Neighbor lists ignoring direction, sorted and unique.
inline std::vector<std::vector<NodeId>> undirected_neighbors(const Graph& g) {
  std::vector<std::vector<NodeId>> nbr(g.n());
  for (NodeId v = 0; v < g.n(); ++v) {
    for (const Arc& a : g.out(v)) nbr[v].push_back(a.to);
    if (g.directed()) {
      for (const Arc& a : g.in(v)) nbr[v].push_back(a.to);
      std::sort(nbr[v].begin(), nbr[v].end());
      nbr[v].erase(std::unique(nbr[v].begin(), nbr[v].end()), nbr[v].end());
    }
  }
  return nbr;
}

class SampleState {
 public:
  SampleState(const Graph& g, const SampleSpec& spec)
      : g_(g), spec_(spec), rng_(spec.rng_seed), nbr_(undirected_neighbors(g)), visited_(g.n(), 0) {
    for (NodeId v = 0; v < g.n(); ++v) {
      if (!nbr_[v].empty()) ++eligible_;
    }
  }

  Rng& rng() { return rng_; }
  const std::vector<NodeId>& neighbors(NodeId v) const { return nbr_[v]; }
  bool visited(NodeId v) const { return visited_[v] != 0; }
  std::size_t count() const { return order_.size(); }
  std::size_t eligible() const { return eligible_; }

  void visit(NodeId v) {
    visited_[v] = 1;
    order_.push_back(v);
  }

  /// First call returns the requested root (if any); later calls a uniform
  /// random unvisited node with at least one neighbor.
  NodeId next_root() {
    if (!used_root_ && spec_.root) {
      used_root_ = true;
      if (*spec_.root >= g_.n()) throw Error("sample root out of range");
      return *spec_.root;
    }
    used_root_ = true;
    std::vector<NodeId> pool;
    for (NodeId v = 0; v < g_.n(); ++v) {
      if (!visited_[v] && !nbr_[v].empty()) pool.push_back(v);
    }
    if (pool.empty()) throw Error("sampler ran out of reachable nodes");
    return pool[rng_.index(pool.size())];
  }

  std::vector<NodeId> take_nodes() { return std::move(order_); }

 private:
  const Graph& g_;
  const SampleSpec& spec_;
  Rng rng_;
  std::vector<std::vector<NodeId>> nbr_;
  std::vector<char> visited_;
  std::vector<NodeId> order_;
  std::size_t eligible_ = 0;
  bool used_root_ = false;
};

inline std::vector<NodeId> breadth_first(SampleState& st, std::size_t target, std::size_t limit) {
  std::vector<NodeId> queue;
  std::size_t head = 0;
  std::vector<NodeId> fresh;
  while (st.count() < target) {
    if (head == queue.size()) {
      NodeId r = st.next_root();
      if (!st.visited(r)) st.visit(r);
      queue.push_back(r);
      continue;
    }
    NodeId u = queue[head++];
    fresh.clear();
    for (NodeId v : st.neighbors(u)) {
      if (!st.visited(v)) fresh.push_back(v);
    }
    if (fresh.size() > limit) {
      for (std::size_t i = 0; i < limit; ++i) {
        std::swap(fresh[i], fresh[i + st.rng().index(fresh.size() - i)]);
      }
      fresh.resize(limit);
      std::sort(fresh.begin(), fresh.end());
    }
    for (NodeId v : fresh) {
      if (st.count() == target) break;
      st.visit(v);
      queue.push_back(v);
    }
  }
  return st.take_nodes();
}

inline std::vector<NodeId> random_walk(SampleState& st, std::size_t target, std::size_t n, double flyback,
                                       std::set<std::pair<NodeId, NodeId>>& traversed) {
  NodeId start = st.next_root();
  st.visit(start);
  NodeId cur = start;
  std::size_t stall = 0;
  while (st.count() < target) {
    if (stall >= kStallFactor * n) {
      start = st.next_root();
      st.visit(start);
      cur = start;
      stall = 0;
      continue;
    }
    if (flyback > 0.0 && st.rng().uniform() < flyback) {
      cur = start;
      ++stall;
      continue;
    }
    const auto& nb = st.neighbors(cur);
    if (nb.empty()) {
      stall = kStallFactor * n;
      continue;
    }
    NodeId next = nb[st.rng().index(nb.size())];
    traversed.emplace(std::min(cur, next), std::max(cur, next));
    if (!st.visited(next)) {
      st.visit(next);
      stall = 0;
    } else {
      ++stall;
    }
    cur = next;
  }
  return st.take_nodes();
}

}  // namespace detail

/// Number of nodes a sample of g with this fraction contains.
inline std::size_t sample_size(const Graph& g, double fraction) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(g.n()) - 1e-9));
}

/// Topology-based subgraph sample with exactly ceil(fraction * n) nodes.
/// BFS, SB and ISRW return the node-induced subgraph; SRW and RWF keep only
/// the edges the walk traversed. Walks ignore edge direction.
inline Graph sample_subgraph(const Graph& g, const SampleSpec& spec) {
  spec.validate();
  if (spec.fraction * static_cast<double>(g.n()) < 2.0) throw Error("sample would contain fewer than 2 nodes");
  if (g.m() == 0) throw Error("cannot sample a graph with no edges");
  const std::size_t target = sample_size(g, spec.fraction);
  detail::SampleState st(g, spec);
  if (st.eligible() < target) throw Error("graph has fewer non-isolated nodes than the sample size");

  switch (spec.method) {
    case SampleMethod::BFS:
      return induced_subgraph(g, detail::breadth_first(st, target, g.n()));
    case SampleMethod::SB:
      return induced_subgraph(g, detail::breadth_first(st, target, spec.snowball_limit));
    case SampleMethod::ISRW: {
      std::set<std::pair<NodeId, NodeId>> traversed;
      return induced_subgraph(g, detail::random_walk(st, target, g.n(), 0.0, traversed));
    }
    case SampleMethod::SRW:
    case SampleMethod::RWF: {
      std::set<std::pair<NodeId, NodeId>> traversed;
      const double flyback = spec.method == SampleMethod::RWF ? spec.flyback_p : 0.0;
      auto nodes = detail::random_walk(st, target, g.n(), flyback, traversed);
      std::vector<Edge> kept;
      for (const Edge& e : g.edges()) {
        if (traversed.count({std::min(e.src, e.dst), std::max(e.src, e.dst)})) kept.push_back(e);
      }
      return subgraph_with_edges(g, std::move(nodes), kept);
    }
  }
  throw Error("unreachable sampler");
}

/// `count` independent samples; sample i uses substream i of spec.rng_seed.
inline std::vector<Graph> sample_many(const Graph& g, SampleSpec spec, std::size_t count) {
  std::vector<Graph> out;
  out.reserve(count);
  const std::uint64_t base = spec.rng_seed;
  for (std::size_t i = 0; i < count; ++i) {
    spec.rng_seed = substream(base, i);
    out.push_back(sample_subgraph(g, spec));
  }
  return out;
}

/// Kolmogorov-Smirnov D: sup |F0(x) - F1(x)| over the union of supports.
inline double ks_d_statistic(const EmpiricalCdf& f0, const EmpiricalCdf& f1) {
  if (f0.empty() || f1.empty()) throw Error("D-statistic of an empty CDF");
  double d = 0.0;
  for (const auto* f : {&f0, &f1}) {
    for (double x : f->support()) d = std::max(d, std::abs(f0(x) - f1(x)));
  }
  return d;
}

/// D-statistic between the degree distributions of a sample and its parent.
inline double degree_d_statistic(const Graph& parent, const Graph& sample) {
  return ks_d_statistic(degree_distribution(parent), degree_distribution(sample));
}

inline double clustering_d_statistic(const Graph& parent, const Graph& sample) {
  return ks_d_statistic(clustering_distribution(parent), clustering_distribution(sample));
}

/// Comment line appended to a written sample: D-statistics against the parent.
inline void write_sample_sidecar(std::ostream& out, const Graph& parent, const Graph& sample) {
  out << "# d_statistic degree " << detail::format_double(degree_d_statistic(parent, sample)) << " clustering "
      << detail::format_double(clustering_d_statistic(parent, sample)) << '\n';
}

}  // namespace disco
