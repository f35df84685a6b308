#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "disco/diffusion.hpp"
#include "disco/dqn.hpp"
#include "disco/embedding.hpp"
#include "disco/graph.hpp"
#include "disco/rng.hpp"

namespace disco {

enum class SelectionMethod { TopK, Iterative, Celf, Random };

inline std::string_view to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::TopK: return "topk";
    case SelectionMethod::Iterative: return "iterative";
    case SelectionMethod::Celf: return "celf";
    case SelectionMethod::Random: return "random";
  }
  return "?";
}

inline SelectionMethod parse_selection_method(std::string_view s) {
  if (s == "topk" || s == "disco") return SelectionMethod::TopK;
  if (s == "iterative") return SelectionMethod::Iterative;
  if (s == "celf") return SelectionMethod::Celf;
  if (s == "random") return SelectionMethod::Random;
  throw Error("unknown selection method '" + std::string(s) + "'");
}

/// Selected seeds in selection order. `score` holds the Q value (topk,
/// iterative) or marginal gain (celf) each seed had when it was chosen.
struct SeedSet {
  std::vector<NodeId> nodes;
  std::vector<double> score;
  SelectionMethod method = SelectionMethod::TopK;

  std::size_t size() const noexcept { return nodes.size(); }
};

/// The k largest entries of q, ties to the smallest id.
inline std::vector<NodeId> top_k_by_q(const Vector& q, std::size_t k) {
  const auto n = static_cast<std::size_t>(q.size());
  if (k > n) throw Error("k exceeds the number of nodes");
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](NodeId a, NodeId b) { return q(a) > q(b) || (q(a) == q(b) && a < b); });
  order.resize(k);
  return order;
}

/// One embedding with no seeds, then the k highest-Q nodes.
inline SeedSet select_topk(const Graph& g, const Theta& theta, std::size_t k, const EmbedOptions& opts = {}) {
  if (k > g.n()) throw Error("k exceeds the number of nodes");
  const Vector q = q_values(g, {}, theta, opts);
  SeedSet s;
  s.method = SelectionMethod::TopK;
  s.nodes = top_k_by_q(q, k);
  for (NodeId v : s.nodes) s.score.push_back(q(v));
  return s;
}

/// Re-embeds after every insertion and takes the best remaining node.
inline SeedSet select_iterative(const Graph& g, const Theta& theta, std::size_t k, const EmbedOptions& opts = {}) {
  if (k > g.n()) throw Error("k exceeds the number of nodes");
  Neighborhoods nb(g, opts.neighbors);
  SeedSet s;
  s.method = SelectionMethod::Iterative;
  for (std::size_t i = 0; i < k; ++i) {
    const Vector q = q_values(embed(nb, seed_indicator(g.n(), s.nodes), theta, opts.iterations), theta);
    const NodeId v = argmax_non_seed(q, s.nodes);
    s.nodes.push_back(v);
    s.score.push_back(q(v));
  }
  return s;
}

/// Uniform sample without replacement.
inline SeedSet random_seeds(std::size_t n, std::size_t k, Rng& rng) {
  if (k > n) throw Error("k exceeds the number of nodes");
  std::vector<NodeId> pool(n);
  std::iota(pool.begin(), pool.end(), NodeId{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.index(n - i)]);
  pool.resize(k);
  return {pool, std::vector<double>(k, 0.0), SelectionMethod::Random};
}

using SpreadFunction = std::function<double(std::span<const NodeId>)>;

/// Lazy greedy (CELF). Stale gains are upper bounds by submodularity; the
/// top entry is re-evaluated until it is fresh for the current round. Ties
/// go to the smallest id, matching plain greedy.
inline SeedSet celf_greedy(std::size_t n, std::size_t k, const SpreadFunction& spread) {
  if (k > n) throw Error("k exceeds the number of nodes");
  struct Entry {
    double gain;
    double spread;
    NodeId node;
    std::size_t round;
  };
  auto lower = [](const Entry& a, const Entry& b) { return a.gain < b.gain || (a.gain == b.gain && a.node > b.node); };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower)> heap(lower);
  SeedSet s;
  s.method = SelectionMethod::Celf;
  if (k == 0) return s;
  std::vector<NodeId> cand(1);
  for (NodeId v = 0; v < n; ++v) {
    cand[0] = v;
    const double sv = spread(cand);
    heap.push({sv, sv, v, 0});
  }
  double base = 0.0;
  std::vector<NodeId> trial;
  while (s.size() < k) {
    Entry top = heap.top();
    heap.pop();
    if (top.round == s.size()) {
      s.nodes.push_back(top.node);
      s.score.push_back(top.gain);
      base = top.spread;
      continue;
    }
    trial = s.nodes;
    trial.push_back(top.node);
    top.spread = spread(trial);
    top.gain = top.spread - base;
    top.round = s.size();
    heap.push(top);
  }
  return s;
}

inline SeedSet celf_greedy_exact(const Graph& g, DiffusionModel model, std::size_t k) {
  Propagation p(g, model);
  return celf_greedy(g.n(), k, [&](std::span<const NodeId> seeds) { return exact_spread(p, seeds); });
}

/// CELF over a fixed set of `runs` sampled worlds (the same worlds for every
/// evaluation), i.e. exact greedy on the sample average.
inline SeedSet celf_greedy_mc(const Graph& g, DiffusionModel model, std::size_t k, std::size_t runs,
                              std::uint64_t rng_seed, unsigned threads = 1) {
  Propagation p(g, model);
  return celf_greedy(g.n(), k, [&](std::span<const NodeId> seeds) {
    return estimate_spread(p, seeds, runs, rng_seed, threads).mean;
  });
}

// ---------------------------------------------------------------------------
// Stability of one-shot top-k selection against re-embedding.

struct InsertionStats {
  std::size_t seeds_before = 0;     // |S| before the insertion
  NodeId inserted = 0;
  std::size_t pairs = 0;
  double preserved = 1.0;           // fraction of pairs whose Q order survived
  double gap_mean = 0.0;            // mean |(QA-QB) - (QA'-QB')| on normalized Q
  double gap_max = 0.0;
  std::size_t conditional_flips = 0;  // flips among pairs with |QA-QB| > gap_max
};

struct StabilityReport {
  double delta_rank = 1.0;
  double delta_inf = 1.0;
  double claim_bound = 0.0;     // sum_{i=1..4} d^i / n
  double proof_bound = 0.0;     // sum_{i=1..4} 2 i d^i / n^2
  double observed_gap = 0.0;    // mean of per-insertion gap_mean
  SpreadEstimate spread_topk;
  SpreadEstimate spread_iterative;
  std::vector<NodeId> topk;
  std::vector<NodeId> iterative;
  std::vector<InsertionStats> insertions;
};

struct StabilityOptions {
  DiffusionModel model;
  std::size_t pair_sample = 10000;
  std::size_t full_pairs_max_n = 2000;  // enumerate every pair up to this n
  std::size_t spread_runs = 10000;
  std::uint64_t rng_seed = 1;
  unsigned threads = 1;
};

namespace detail {

inline Vector minmax_normalized(const Vector& q, const std::vector<NodeId>& nodes) {
  double lo = q(nodes.front()), hi = lo;
  for (NodeId v : nodes) {
    lo = std::min(lo, q(v));
    hi = std::max(hi, q(v));
  }
  Vector out = Vector::Zero(q.size());
  if (hi > lo) {
    for (NodeId v : nodes) out(v) = (q(v) - lo) / (hi - lo);
  }
  return out;
}

}  // namespace detail

/// Runs iterative selection and, at each of the k-1 re-embeddings that feed a
/// later pick, compares the Q order of candidate pairs before and after the
/// insertion. Pairs with equal Q on either side count as preserved.
inline StabilityReport stability_report(const Graph& g, const Theta& theta, std::size_t k, const EmbedOptions& opts,
                                        const StabilityOptions& so) {
  if (k < 1) throw Error("stability report needs k >= 1");
  if (g.n() < k + 1) throw Error("stability report needs at least 2 non-seed nodes");
  Neighborhoods nb(g, opts.neighbors);
  Rng rng(substream(so.rng_seed, "pairs"));
  StabilityReport rep;

  std::vector<NodeId> seeds;
  Vector q_prev = q_values(embed(nb, seed_indicator(g.n(), seeds), theta, opts.iterations), theta);
  seeds.push_back(argmax_non_seed(q_prev, seeds));
  std::vector<char> taken(g.n(), 0);
  taken[seeds.back()] = 1;
  while (seeds.size() < k) {
    const Vector q_next = q_values(embed(nb, seed_indicator(g.n(), seeds), theta, opts.iterations), theta);
    std::vector<NodeId> cand;
    for (NodeId v = 0; v < g.n(); ++v) {
      if (!taken[v]) cand.push_back(v);
    }
    const Vector a = detail::minmax_normalized(q_prev, cand);
    const Vector b = detail::minmax_normalized(q_next, cand);

    InsertionStats st;
    st.seeds_before = seeds.size() - 1;
    st.inserted = seeds.back();
    std::size_t kept = 0;
    double gap_sum = 0.0;
    std::vector<std::pair<double, bool>> records;  // (|normalized diff before|, flipped)
    auto visit = [&](NodeId x, NodeId y) {
      const double before = q_prev(x) - q_prev(y);
      const double after = q_next(x) - q_next(y);
      const bool ok = before * after >= 0.0;
      kept += ok;
      const double nd = a(x) - a(y);
      const double gap = std::abs(nd - (b(x) - b(y)));
      gap_sum += gap;
      st.gap_max = std::max(st.gap_max, gap);
      records.emplace_back(std::abs(nd), !ok);
      ++st.pairs;
    };
    if (g.n() <= so.full_pairs_max_n) {
      for (std::size_t i = 0; i < cand.size(); ++i) {
        for (std::size_t j = i + 1; j < cand.size(); ++j) visit(cand[i], cand[j]);
      }
    } else {
      for (std::size_t p = 0; p < so.pair_sample; ++p) {
        const std::size_t i = rng.index(cand.size());
        std::size_t j = rng.index(cand.size() - 1);
        if (j >= i) ++j;
        visit(cand[i], cand[j]);
      }
    }
    st.preserved = static_cast<double>(kept) / static_cast<double>(st.pairs);
    st.gap_mean = gap_sum / static_cast<double>(st.pairs);
    for (const auto& [diff, flipped] : records) {
      if (flipped && diff > st.gap_max) ++st.conditional_flips;
    }
    rep.insertions.push_back(st);

    const NodeId v = argmax_non_seed(q_next, seeds);
    seeds.push_back(v);
    taken[v] = 1;
    q_prev = q_next;
  }

  if (!rep.insertions.empty()) {
    double pr = 0.0, gap = 0.0;
    for (const auto& st : rep.insertions) {
      pr += st.preserved;
      gap += st.gap_mean;
    }
    rep.delta_rank = pr / static_cast<double>(rep.insertions.size());
    rep.observed_gap = gap / static_cast<double>(rep.insertions.size());
  }
  rep.iterative = seeds;
  rep.topk = select_topk(g, theta, k, opts).nodes;
  Propagation p(g, so.model);
  const std::uint64_t eval_seed = substream(so.rng_seed, "spread");
  rep.spread_topk = estimate_spread(p, rep.topk, so.spread_runs, eval_seed, so.threads);
  rep.spread_iterative = estimate_spread(p, rep.iterative, so.spread_runs, eval_seed, so.threads);
  rep.delta_inf = rep.spread_topk.mean / rep.spread_iterative.mean;

  const double d = average_degree(g);
  const double n = static_cast<double>(g.n());
  for (int i = 1; i <= 4; ++i) {
    rep.claim_bound += std::pow(d, i) / n;
    rep.proof_bound += 2.0 * i * std::pow(d, i) / (n * n);
  }
  return rep;
}

}  // namespace disco
