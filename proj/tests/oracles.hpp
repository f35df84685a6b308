#pragma once

// Reference implementations used as test oracles. They share no code with the
// library beyond the Graph container and are written for clarity, not speed.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "disco/embedding.hpp"
#include "disco/graph.hpp"

namespace oracle {

using disco::Graph;
using disco::NodeId;

struct DirectedArc {
  NodeId from, to;
  double w;
};

inline std::vector<DirectedArc> arcs_of(const Graph& g) {
  std::vector<DirectedArc> arcs;
  for (const auto& e : g.edges()) {
    arcs.push_back({e.src, e.dst, e.w});
    if (!g.directed()) arcs.push_back({e.dst, e.src, e.w});
  }
  return arcs;
}

// IC by enumerating the cascade tree: every newly active node flips each arc
// to a still-inactive node; branches carry their probability.
inline double ic_spread(const Graph& g, const std::vector<NodeId>& seeds) {
  const auto arcs = arcs_of(g);
  const std::size_t n = g.n();
  double total = 0.0;
  std::function<void(std::vector<char>&, std::vector<NodeId>, double)> expand =
      [&](std::vector<char>& active, std::vector<NodeId> frontier, double prob) {
        // Arcs tried this step: from frontier nodes to inactive nodes.
        std::vector<DirectedArc> tries;
        for (const auto& a : arcs) {
          if (std::find(frontier.begin(), frontier.end(), a.from) != frontier.end() && !active[a.to]) tries.push_back(a);
        }
        if (tries.empty()) {
          total += prob * static_cast<double>(std::count(active.begin(), active.end(), 1));
          return;
        }
        const std::size_t t = tries.size();
        for (std::size_t mask = 0; mask < (std::size_t{1} << t); ++mask) {
          double p = prob;
          std::vector<char> next = active;
          std::vector<NodeId> fresh;
          for (std::size_t i = 0; i < t; ++i) {
            if (mask >> i & 1) {
              p *= tries[i].w;
              if (!next[tries[i].to]) {
                next[tries[i].to] = 1;
                fresh.push_back(tries[i].to);
              }
            } else {
              p *= 1.0 - tries[i].w;
            }
          }
          if (p == 0.0) continue;
          expand(next, fresh, p);
        }
      };
  std::vector<char> active(n, 0);
  for (NodeId s : seeds) active[s] = 1;
  expand(active, seeds, 1.0);
  return total;
}

// LT through its live-edge form: each node keeps at most one incoming arc,
// arc (u,v) with probability w(u,v); spread = nodes reachable from the seeds.
inline double lt_spread(const Graph& g, const std::vector<NodeId>& seeds) {
  const auto arcs = arcs_of(g);
  const std::size_t n = g.n();
  std::vector<std::vector<DirectedArc>> incoming(n);
  for (const auto& a : arcs) incoming[a.to].push_back(a);
  std::vector<int> choice(n, -1);  // index into incoming, -1 = none
  double total = 0.0;
  std::function<void(std::size_t, double)> rec = [&](std::size_t v, double prob) {
    if (prob == 0.0) return;
    if (v == n) {
      std::vector<char> reached(n, 0);
      std::vector<NodeId> stack(seeds.begin(), seeds.end());
      for (NodeId s : seeds) reached[s] = 1;
      while (!stack.empty()) {
        NodeId u = stack.back();
        stack.pop_back();
        for (NodeId x = 0; x < n; ++x) {
          if (!reached[x] && choice[x] >= 0 && incoming[x][static_cast<std::size_t>(choice[x])].from == u) {
            reached[x] = 1;
            stack.push_back(x);
          }
        }
      }
      total += prob * static_cast<double>(std::count(reached.begin(), reached.end(), 1));
      return;
    }
    double rest = 1.0;
    for (std::size_t i = 0; i < incoming[v].size(); ++i) {
      choice[v] = static_cast<int>(i);
      rec(v + 1, prob * incoming[v][i].w);
      rest -= incoming[v][i].w;
    }
    choice[v] = -1;
    rec(v + 1, prob * std::max(0.0, rest));
  };
  rec(0, 1.0);
  return total;
}

// Plain greedy: every round re-evaluates every candidate; ties to smallest id.
inline std::vector<NodeId> naive_greedy(std::size_t n, std::size_t k,
                                        const std::function<double(const std::vector<NodeId>&)>& spread) {
  std::vector<NodeId> s;
  for (std::size_t round = 0; round < k; ++round) {
    double best = -1.0;
    NodeId pick = 0;
    for (NodeId v = 0; v < n; ++v) {
      if (std::find(s.begin(), s.end(), v) != s.end()) continue;
      auto t = s;
      t.push_back(v);
      const double val = spread(t);
      if (val > best) {
        best = val;
        pick = v;
      }
    }
    s.push_back(pick);
  }
  return s;
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// Embedding rounds and Q head with explicit loops over nodes and coordinates, neighbors
// taken from out-arcs (undirected: both endpoints).
inline std::vector<std::vector<double>> embed(const Graph& g, const std::vector<NodeId>& seeds,
                                              const disco::Theta& th, int iterations) {
  const std::size_t n = g.n(), q = th.q();
  std::vector<std::vector<std::pair<NodeId, double>>> nbr(n);
  for (const auto& a : arcs_of(g)) nbr[a.from].push_back({a.to, a.w});
  std::vector<double> a(n, 0.0);
  for (NodeId s : seeds) a[s] = 1.0;
  std::vector<std::vector<double>> x(n, std::vector<double>(q, 0.0));
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::vector<double>> nx(n, std::vector<double>(q, 0.0));
    for (NodeId v = 0; v < n; ++v) {
      std::vector<double> sx(q, 0.0), se(q, 0.0);
      for (auto [u, w] : nbr[v]) {
        for (std::size_t j = 0; j < q; ++j) {
          sx[j] += x[u][j];
          se[j] += relu(th.alpha3(static_cast<Eigen::Index>(j)) * w);
        }
      }
      for (std::size_t r = 0; r < q; ++r) {
        double pre = th.alpha4(static_cast<Eigen::Index>(r)) * a[v];
        for (std::size_t j = 0; j < q; ++j) {
          pre += th.alpha1(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) * sx[j] +
                 th.alpha2(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) * se[j];
        }
        nx[v][r] = relu(pre);
      }
    }
    x = nx;
  }
  return x;
}

inline std::vector<double> q_values(const Graph& g, const std::vector<NodeId>& seeds, const disco::Theta& th,
                                   int iterations) {
  const auto x = embed(g, seeds, th, iterations);
  const std::size_t n = g.n(), q = th.q();
  std::vector<double> sum(q, 0.0);
  for (const auto& xv : x) {
    for (std::size_t j = 0; j < q; ++j) sum[j] += xv[j];
  }
  std::vector<double> out(n, 0.0);
  for (NodeId v = 0; v < n; ++v) {
    double val = 0.0;
    for (std::size_t r = 0; r < q; ++r) {
      double gl = 0.0, lo = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        gl += th.beta2(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) * sum[j];
        lo += th.beta3(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) * x[v][j];
      }
      val += th.beta1(static_cast<Eigen::Index>(r)) * relu(gl) + th.beta1(static_cast<Eigen::Index>(q + r)) * relu(lo);
    }
    out[v] = val;
  }
  return out;
}

// Kolmogorov-Smirnov D straight from the samples: scan every value seen.
inline double ks_d(std::vector<double> a, std::vector<double> b) {
  std::vector<double> pts = a;
  pts.insert(pts.end(), b.begin(), b.end());
  auto cdf = [](const std::vector<double>& s, double x) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double y) { return y <= x; })) /
           static_cast<double>(s.size());
  };
  double d = 0.0;
  for (double x : pts) d = std::max(d, std::abs(cdf(a, x) - cdf(b, x)));
  return d;
}

}  // namespace oracle
