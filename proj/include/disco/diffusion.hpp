#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "disco/graph.hpp"
#include "disco/rng.hpp"

namespace disco {

enum class ModelKind { IC, LT };

inline std::string_view to_string(ModelKind k) { return k == ModelKind::IC ? "ic" : "lt"; }

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "ic" || s == "IC") return ModelKind::IC;
  if (s == "lt" || s == "LT") return ModelKind::LT;
  throw Error("unknown diffusion model '" + std::string(s) + "'");
}

/// IC uses w(u,v) as the activation probability of arc u->v. LT uses it as
/// the influence of u on v; incoming weights of a node above 1 in total are
/// scaled down to sum 1 when `lt_renormalize` is set and rejected otherwise.
struct DiffusionModel {
  ModelKind kind = ModelKind::IC;
  bool lt_renormalize = false;
};

struct SpreadEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t runs = 0;
};

/// Arc probabilities of (graph, model), laid out per source node so that a
/// newly active node walks its outgoing arcs. Each arc has a stable index
/// used to hash its coin flip, so run r sees the same live-edge world for
/// every seed set.
class Propagation {
 public:
  Propagation(const Graph& g, DiffusionModel model) : n_(g.n()), kind_(model.kind) {
    offsets_.assign(n_ + 1, 0);
    for (NodeId u = 0; u < n_; ++u) offsets_[u + 1] = offsets_[u] + g.out(u).size();
    arcs_.resize(offsets_[n_]);
    std::vector<double> in_sum(n_, 0.0);
    for (NodeId u = 0; u < n_; ++u) {
      std::size_t i = offsets_[u];
      for (const Arc& a : g.out(u)) {
        arcs_[i++] = a;
        in_sum[a.to] += a.w;
      }
    }
    if (kind_ == ModelKind::LT) {
      for (NodeId v = 0; v < n_; ++v) {
        if (in_sum[v] > 1.0 + 1e-12 && !model.lt_renormalize) {
          throw Error("LT incoming weights of node " + std::to_string(v) + " sum to " + std::to_string(in_sum[v]) +
                      " > 1 (enable renormalization)");
        }
      }
      for (Arc& a : arcs_) {
        if (in_sum[a.to] > 1.0) a.w /= in_sum[a.to];
      }
    }
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t arc_count() const noexcept { return arcs_.size(); }
  ModelKind kind() const noexcept { return kind_; }
  std::size_t arc_begin(NodeId u) const noexcept { return offsets_[u]; }
  std::size_t arc_end(NodeId u) const noexcept { return offsets_[u + 1]; }
  const Arc& arc(std::size_t i) const noexcept { return arcs_[i]; }

  /// Coin of arc i in the world identified by key (IC liveness).
  static double arc_coin(std::uint64_t key, std::size_t i) noexcept { return hashed_unit(key, 2 * i); }

  /// LT threshold of node v in world key, in (0, 1].
  static double threshold(std::uint64_t key, NodeId v) noexcept { return 1.0 - hashed_unit(key, 2 * std::uint64_t{v} + 1); }

 private:
  std::size_t n_;
  ModelKind kind_;
  std::vector<std::size_t> offsets_;
  std::vector<Arc> arcs_;
};

/// Reusable per-thread scratch space for single cascades.
class Simulator {
 public:
  explicit Simulator(const Propagation& p) : p_(p), active_(p.n(), 0), acc_(p.n(), 0.0), theta_(p.n(), -1.0) {}

  /// Runs one cascade in world `key`; returns the activated nodes in
  /// activation order, seeds first.
  std::span<const NodeId> run(std::span<const NodeId> seeds, std::uint64_t key) {
    reset();
    for (NodeId s : seeds) {
      if (s >= p_.n()) throw Error("seed id " + std::to_string(s) + " out of range");
      if (!active_[s]) activate(s);
    }
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const NodeId u = order_[head];
      for (std::size_t i = p_.arc_begin(u); i < p_.arc_end(u); ++i) {
        const Arc& a = p_.arc(i);
        if (active_[a.to]) continue;
        if (p_.kind() == ModelKind::IC) {
          if (Propagation::arc_coin(key, i) < a.w) activate(a.to);
        } else {
          if (theta_[a.to] < 0.0) {
            theta_[a.to] = Propagation::threshold(key, a.to);
            touched_.push_back(a.to);
          }
          acc_[a.to] += a.w;
          if (acc_[a.to] >= theta_[a.to]) activate(a.to);
        }
      }
    }
    return order_;
  }

 private:
  void activate(NodeId v) {
    active_[v] = 1;
    order_.push_back(v);
  }

  void reset() {
    for (NodeId v : order_) active_[v] = 0;
    for (NodeId v : touched_) {
      acc_[v] = 0.0;
      theta_[v] = -1.0;
    }
    order_.clear();
    touched_.clear();
  }

  const Propagation& p_;
  std::vector<char> active_;
  std::vector<double> acc_;
  std::vector<double> theta_;
  std::vector<NodeId> order_;
  std::vector<NodeId> touched_;
};

/// World key of run `run` under base seed `rng_seed`.
inline std::uint64_t run_key(std::uint64_t rng_seed, std::size_t run) { return substream(rng_seed, run); }

/// One cascade. The returned set always contains the seeds.
inline std::vector<NodeId> simulate_once(const Graph& g, DiffusionModel model, std::span<const NodeId> seeds,
                                         std::uint64_t rng_seed) {
  if (seeds.empty()) throw Error("simulation needs at least one seed");
  Propagation p(g, model);
  Simulator sim(p);
  auto act = sim.run(seeds, rng_seed);
  return {act.begin(), act.end()};
}

namespace detail {

/// Calls body(run, simulator) for run in [0, runs), split across threads in
/// contiguous chunks. Results must be written per run index.
template <class Body>
void for_each_run(const Propagation& p, std::size_t runs, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(runs)));
  if (threads == 1) {
    Simulator sim(p);
    for (std::size_t r = 0; r < runs; ++r) body(r, sim);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (runs + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(runs, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      Simulator sim(p);
      for (std::size_t r = lo; r < hi; ++r) body(r, sim);
    });
  }
  for (auto& th : pool) th.join();
}

inline SpreadEstimate summarize(const std::vector<double>& values) {
  SpreadEstimate est;
  est.runs = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  est.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return est;
}

inline void check_seeds(const Graph& g, std::span<const NodeId> seeds) {
  if (seeds.empty()) throw Error("seed set is empty");
  for (NodeId s : seeds) {
    if (s >= g.n()) throw Error("seed id " + std::to_string(s) + " out of range");
  }
}

}  // namespace detail

/// Monte-Carlo spread over `runs` worlds; run r uses world run_key(rng_seed, r).
/// The reduction is sequential in run order, so any thread count gives the
/// same bits.
inline SpreadEstimate estimate_spread(const Propagation& p, std::span<const NodeId> seeds, std::size_t runs,
                                      std::uint64_t rng_seed, unsigned threads = 1) {
  if (runs < 1) throw Error("estimate_spread needs runs >= 1");
  if (seeds.empty()) throw Error("seed set is empty");
  std::vector<double> counts(runs);
  detail::for_each_run(p, runs, threads, [&](std::size_t r, Simulator& sim) {
    counts[r] = static_cast<double>(sim.run(seeds, run_key(rng_seed, r)).size());
  });
  return detail::summarize(counts);
}

inline SpreadEstimate estimate_spread(const Graph& g, DiffusionModel model, std::span<const NodeId> seeds,
                                      std::size_t runs, std::uint64_t rng_seed, unsigned threads = 1) {
  detail::check_seeds(g, seeds);
  return estimate_spread(Propagation(g, model), seeds, runs, rng_seed, threads);
}

/// sigma(S + v) - sigma(S) estimated on paired worlds: run r of both terms
/// sees the same live edges and thresholds, so every per-run gain is >= 0.
inline SpreadEstimate marginal_gain_estimate(const Propagation& p, std::span<const NodeId> seeds, NodeId v,
                                             std::size_t runs, std::uint64_t rng_seed, unsigned threads = 1) {
  if (runs < 1) throw Error("marginal_gain needs runs >= 1");
  if (v >= p.n()) throw Error("candidate id out of range");
  if (std::find(seeds.begin(), seeds.end(), v) != seeds.end()) throw Error("candidate is already a seed");
  std::vector<NodeId> with(seeds.begin(), seeds.end());
  with.push_back(v);
  std::vector<double> gains(runs);
  detail::for_each_run(p, runs, threads, [&](std::size_t r, Simulator& sim) {
    const std::uint64_t key = run_key(rng_seed, r);
    const double base = seeds.empty() ? 0.0 : static_cast<double>(sim.run(seeds, key).size());
    gains[r] = static_cast<double>(sim.run(with, key).size()) - base;
  });
  return detail::summarize(gains);
}

inline double marginal_gain(const Graph& g, DiffusionModel model, std::span<const NodeId> seeds, NodeId v,
                            std::size_t runs, std::uint64_t rng_seed, unsigned threads = 1) {
  return marginal_gain_estimate(Propagation(g, model), seeds, v, runs, rng_seed, threads).mean;
}

// ---------------------------------------------------------------------------
// Exact spread by live-edge world enumeration (tiny graphs only).

inline constexpr std::size_t kMaxExactWorlds = std::size_t{1} << 20;

namespace detail {

inline double exact_ic(const Propagation& p, std::span<const NodeId> seeds) {
  std::vector<std::size_t> uncertain;
  for (std::size_t i = 0; i < p.arc_count(); ++i) {
    if (p.arc(i).w > 0.0 && p.arc(i).w < 1.0) uncertain.push_back(i);
  }
  if (uncertain.size() > 20) {
    throw Error("exact IC spread needs <= 20 uncertain arcs, got " + std::to_string(uncertain.size()));
  }
  std::vector<char> live(p.arc_count(), 0);
  for (std::size_t i = 0; i < p.arc_count(); ++i) live[i] = p.arc(i).w >= 1.0;
  std::vector<char> active(p.n());
  std::vector<NodeId> queue;
  double total = 0.0;
  const std::size_t worlds = std::size_t{1} << uncertain.size();
  for (std::size_t mask = 0; mask < worlds; ++mask) {
    double prob = 1.0;
    for (std::size_t b = 0; b < uncertain.size(); ++b) {
      const bool on = (mask >> b) & 1U;
      live[uncertain[b]] = on;
      const double w = p.arc(uncertain[b]).w;
      prob *= on ? w : 1.0 - w;
    }
    std::fill(active.begin(), active.end(), 0);
    queue.clear();
    for (NodeId s : seeds) {
      if (!active[s]) {
        active[s] = 1;
        queue.push_back(s);
      }
    }
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const NodeId u = queue[h];
      for (std::size_t i = p.arc_begin(u); i < p.arc_end(u); ++i) {
        const NodeId v = p.arc(i).to;
        if (live[i] && !active[v]) {
          active[v] = 1;
          queue.push_back(v);
        }
      }
    }
    total += prob * static_cast<double>(queue.size());
  }
  return total;
}

// Live-edge view of LT: each node keeps at most one incoming arc, arc u->v
// with probability w(u,v) and none with probability 1 - sum.
inline double exact_lt(const Propagation& p, std::span<const NodeId> seeds) {
  const std::size_t n = p.n();
  struct Choice {
    NodeId parent;  // n means "no live incoming arc"
    double prob;
  };
  std::vector<std::vector<Choice>> choices(n);
  for (NodeId u = 0; u < n; ++u) {
    for (std::size_t i = p.arc_begin(u); i < p.arc_end(u); ++i) {
      const Arc& a = p.arc(i);
      if (a.w > 0.0) choices[a.to].push_back({u, a.w});
    }
  }
  std::size_t worlds = 1;
  for (NodeId v = 0; v < n; ++v) {
    double sum = 0.0;
    for (const Choice& c : choices[v]) sum += c.prob;
    const double none = 1.0 - sum;
    if (none > 1e-15) choices[v].push_back({static_cast<NodeId>(n), none});
    if (choices[v].empty()) choices[v].push_back({static_cast<NodeId>(n), 1.0});
    worlds *= choices[v].size();
    if (worlds > kMaxExactWorlds) throw Error("exact LT spread: too many live-edge worlds");
  }
  std::vector<char> is_seed(n, 0);
  for (NodeId s : seeds) is_seed[s] = 1;
  std::vector<std::size_t> digit(n, 0);
  std::vector<signed char> state(n);  // -1 unknown, 0 inactive, 1 active, 2 on stack
  std::vector<NodeId> stack;
  double total = 0.0;
  for (std::size_t w = 0; w < worlds; ++w) {
    double prob = 1.0;
    for (NodeId v = 0; v < n; ++v) prob *= choices[v][digit[v]].prob;
    std::fill(state.begin(), state.end(), -1);
    std::size_t count = 0;
    for (NodeId v = 0; v < n; ++v) {
      // Follow parent pointers until a decided node, a seed, a root or a cycle.
      NodeId cur = v;
      stack.clear();
      signed char result = 0;
      while (true) {
        if (state[cur] == 0 || state[cur] == 1) {
          result = state[cur];
          break;
        }
        if (state[cur] == 2) {
          result = 0;  // cycle without a seed
          break;
        }
        if (is_seed[cur]) {
          state[cur] = 1;
          result = 1;
          break;
        }
        const NodeId parent = choices[cur][digit[cur]].parent;
        if (parent == n) {
          state[cur] = 0;
          result = 0;
          break;
        }
        state[cur] = 2;
        stack.push_back(cur);
        cur = parent;
      }
      for (NodeId s : stack) state[s] = result;
      if (state[v] == 1) ++count;
    }
    total += prob * static_cast<double>(count);
    for (NodeId v = 0; v < n; ++v) {
      if (++digit[v] < choices[v].size()) break;
      digit[v] = 0;
    }
  }
  return total;
}

}  // namespace detail

/// Exact sigma(S): IC enumerates 2^u worlds over the u arcs with 0 < w < 1
/// (u <= 20); LT enumerates per-node incoming-arc choices (<= 2^20 worlds).
inline double exact_spread(const Propagation& p, std::span<const NodeId> seeds) {
  for (NodeId s : seeds) {
    if (s >= p.n()) throw Error("seed id out of range");
  }
  return p.kind() == ModelKind::IC ? detail::exact_ic(p, seeds) : detail::exact_lt(p, seeds);
}

inline double exact_spread(const Graph& g, DiffusionModel model, std::span<const NodeId> seeds) {
  return exact_spread(Propagation(g, model), seeds);
}

}  // namespace disco
