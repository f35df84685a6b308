#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "disco/diffusion.hpp"
#include "disco/embedding.hpp"
#include "disco/graph.hpp"
#include "disco/rng.hpp"

namespace disco {

/// One delta-step experience: from state_seeds, `action` was taken, the next
/// delta rewards summed to reward_sum and the episode reached next_seeds.
struct Transition {
  std::size_t graph = 0;
  std::vector<NodeId> state_seeds;
  NodeId action = 0;
  double reward_sum = 0.0;
  std::vector<NodeId> next_seeds;
  bool terminal = false;
};

/// Bounded FIFO store with uniform sampling (with replacement).
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error("replay capacity must be >= 1");
    items_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return items_.empty(); }

  /// i-th oldest stored transition.
  const Transition& operator[](std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

  std::vector<Transition> sample(std::size_t batch, Rng& rng) const {
    if (items_.empty()) throw Error("cannot sample from an empty replay memory");
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) out.push_back(items_[rng.index(items_.size())]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest element once full
  std::vector<Transition> items_;
};

struct TrainConfig {
  std::size_t episodes = 100;
  std::size_t budget = 10;         // k
  std::size_t batch_size = 64;
  std::size_t delta = 5;
  double gamma = 0.99;
  double lr = 0.001;
  double eps_start = 1.0;
  double eps_end = 0.05;
  std::size_t eps_anneal_steps = 10000;
  std::size_t reward_runs = 100;
  std::size_t replay_capacity = 10000;
  double max_grad_norm = 0.0;      // 0 disables clipping
  std::size_t q = 64;
  EmbedOptions embed;
  DiffusionModel model;
  std::uint64_t rng_seed = 1;
  unsigned threads = 1;

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error("gamma must lie in (0,1)");
    if (!(eps_end >= 0.0 && eps_end <= eps_start && eps_start <= 1.0)) {
      throw Error("need 0 <= eps_end <= eps_start <= 1");
    }
    if (delta < 1) throw Error("delta must be >= 1");
    if (batch_size < 1) throw Error("batch size must be >= 1");
    if (reward_runs < 1) throw Error("reward_runs must be >= 1");
    if (q < 1) throw Error("q must be >= 1");
    if (!(lr >= 0.0)) throw Error("learning rate must be >= 0");
    if (!(max_grad_norm >= 0.0)) throw Error("max_grad_norm must be >= 0");
  }
};

/// Linear annealing: max(eps_end, eps_start - t * (eps_start - eps_end) / steps).
inline double epsilon_at(const TrainConfig& cfg, std::size_t t) {
  if (cfg.eps_anneal_steps == 0) return cfg.eps_end;
  const double e = cfg.eps_start - static_cast<double>(t) * (cfg.eps_start - cfg.eps_end) /
                                       static_cast<double>(cfg.eps_anneal_steps);
  return std::max(cfg.eps_end, e);
}

/// Largest Q among nodes not in `seeds`, ties to the smallest id.
inline NodeId argmax_non_seed(const Vector& q, std::span<const NodeId> seeds) {
  std::vector<char> taken(static_cast<std::size_t>(q.size()), 0);
  for (NodeId s : seeds) taken.at(s) = 1;
  NodeId best = 0;
  bool found = false;
  for (NodeId v = 0; v < taken.size(); ++v) {
    if (taken[v]) continue;
    if (!found || q(v) > q(best)) {
      best = v;
      found = true;
    }
  }
  if (!found) throw Error("every node is already a seed");
  return best;
}

/// With probability eps a uniform non-seed node, otherwise the greedy one.
inline NodeId epsilon_greedy_action(const Vector& q, std::span<const NodeId> seeds, double eps, Rng& rng) {
  std::vector<char> taken(static_cast<std::size_t>(q.size()), 0);
  for (NodeId s : seeds) taken.at(s) = 1;
  std::vector<NodeId> free;
  for (NodeId v = 0; v < taken.size(); ++v) {
    if (!taken[v]) free.push_back(v);
  }
  if (free.empty()) throw Error("every node is already a seed");
  if (rng.uniform() < eps) return free[rng.index(free.size())];
  return argmax_non_seed(q, seeds);
}

/// sigma(S + v) - sigma(S), paired Monte-Carlo estimate.
inline double reward(const Propagation& p, std::span<const NodeId> seeds, NodeId v, std::size_t runs,
                     std::uint64_t rng_seed, unsigned threads = 1) {
  return marginal_gain_estimate(p, seeds, v, runs, rng_seed, threads).mean;
}

inline double reward(const Graph& g, DiffusionModel model, std::span<const NodeId> seeds, NodeId v,
                     std::size_t runs, std::uint64_t rng_seed) {
  return reward(Propagation(g, model), seeds, v, runs, rng_seed);
}

/// Training graphs with their neighborhoods built once.
class TrainingSet {
 public:
  TrainingSet(std::span<const Graph> graphs, NeighborMode mode) : graphs_(graphs) {
    nb_.reserve(graphs.size());
    for (const Graph& g : graphs) nb_.emplace_back(g, mode);
  }

  std::size_t size() const noexcept { return graphs_.size(); }
  const Graph& graph(std::size_t i) const { return graphs_[i]; }
  const Neighborhoods& neighborhoods(std::size_t i) const { return nb_.at(i); }

 private:
  std::span<const Graph> graphs_;
  std::vector<Neighborhoods> nb_;
};

/// reward_sum + gamma * max_{v not in next} Q(v, next); just reward_sum for
/// terminal transitions.
inline double n_step_target(const Transition& t, const Theta& theta, const TrainingSet& set, double gamma,
                            int iterations) {
  if (t.terminal || gamma == 0.0) return t.reward_sum;
  const Neighborhoods& nb = set.neighborhoods(t.graph);
  auto state = embed(nb, seed_indicator(nb.n(), t.next_seeds), theta, iterations);
  const Vector q = q_values(state, theta);
  return t.reward_sum + gamma * q(argmax_non_seed(q, t.next_seeds));
}

inline std::vector<double> n_step_targets(std::span<const Transition> batch, const Theta& theta,
                                          const TrainingSet& set, double gamma, int iterations) {
  std::vector<double> y;
  y.reserve(batch.size());
  for (const Transition& t : batch) y.push_back(n_step_target(t, theta, set, gamma, iterations));
  return y;
}

struct LossAndGrad {
  double loss = 0.0;
  Theta grad;
};

/// Mean squared TD error over the batch and its exact gradient with the
/// targets held constant. relu'(0) is taken as 0.
inline LossAndGrad loss_and_grad(std::span<const Transition> batch, std::span<const double> targets,
                                 const Theta& theta, const TrainingSet& set, int iterations,
                                 bool want_grad = true) {
  if (batch.empty()) throw Error("loss of an empty batch");
  if (targets.size() != batch.size()) throw Error("one target per transition required");
  const auto q = static_cast<Eigen::Index>(theta.q());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  LossAndGrad out{0.0, Theta::zeros(theta.q())};
  Theta& gr = out.grad;
  EmbeddingTrace trace;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& t = batch[b];
    const Neighborhoods& nb = set.neighborhoods(t.graph);
    const auto n = static_cast<Eigen::Index>(nb.n());
    if (t.action >= nb.n()) throw Error("transition action out of range");
    auto state = embed(nb, seed_indicator(nb.n(), t.state_seeds), theta, iterations, want_grad ? &trace : nullptr);
    const QHead head = q_head(state, theta);
    const NodeId v = t.action;
    const double err = head.q(v) - targets[b];
    out.loss += err * err * inv_b;
    if (!want_grad) continue;

    const double g = 2.0 * err * inv_b;  // dL/dQ(v)
    const Vector global_act = head.global.cwiseMax(0.0);
    const Vector local_act = head.local.col(v).cwiseMax(0.0);
    gr.beta1.head(q) += g * global_act;
    gr.beta1.tail(q) += g * local_act;
    const Vector d_global = (g * theta.beta1.head(q).array() * (head.global.array() > 0.0).cast<double>()).matrix();
    const Vector d_local = (g * theta.beta1.tail(q).array() * (head.local.col(v).array() > 0.0).cast<double>()).matrix();
    gr.beta2 += d_global * state.x.rowwise().sum().transpose();
    gr.beta3 += d_local * state.x.col(v).transpose();

    // dL/dx^(I): every node feeds the global sum, v also feeds its own term.
    Matrix dx = (theta.beta2.transpose() * d_global).replicate(1, n);
    dx.col(v) += theta.beta3.transpose() * d_local;

    Matrix g_sum = Matrix::Zero(q, n);
    for (int i = iterations; i >= 1; --i) {
      const Matrix gpre = dx.cwiseProduct((trace.pre[i - 1].array() > 0.0).cast<double>().matrix());
      gr.alpha1 += gpre * trace.agg[i - 1].transpose();
      gr.alpha4 += gpre * trace.a;
      g_sum += gpre;
      if (i > 1) {
        const Matrix back = theta.alpha1.transpose() * gpre;
        dx.setZero();
        for (NodeId w = 0; w < nb.n(); ++w) {
          for (const Arc& arc : nb.of(w)) dx.col(arc.to) += back.col(w);
        }
      }
    }
    gr.alpha2 += g_sum * trace.edge_term.transpose();
    const Matrix d_edge = theta.alpha2.transpose() * g_sum;
    for (NodeId w = 0; w < nb.n(); ++w) {
      for (const Arc& arc : nb.of(w)) {
        gr.alpha3 += (d_edge.col(w).array() * ((theta.alpha3 * arc.w).array() > 0.0).cast<double>() * arc.w).matrix();
      }
    }
  }
  return out;
}

inline double loss(std::span<const Transition> batch, std::span<const double> targets, const Theta& theta,
                   const TrainingSet& set, int iterations) {
  return loss_and_grad(batch, targets, theta, set, iterations, false).loss;
}

inline double loss(std::span<const Transition> batch, const Theta& theta, const TrainingSet& set, double gamma,
                   int iterations) {
  auto y = n_step_targets(batch, theta, set, gamma, iterations);
  return loss(batch, y, theta, set, iterations);
}

inline Theta grad_theta(std::span<const Transition> batch, std::span<const double> targets, const Theta& theta,
                        const TrainingSet& set, int iterations) {
  return loss_and_grad(batch, targets, theta, set, iterations).grad;
}

inline Theta grad_theta(std::span<const Transition> batch, const Theta& theta, const TrainingSet& set, double gamma,
                        int iterations) {
  auto y = n_step_targets(batch, theta, set, gamma, iterations);
  return grad_theta(batch, y, theta, set, iterations);
}

inline double squared_norm(const Theta& t) {
  double s = 0.0;
  t.for_each([&](std::string_view, const auto& x) { s += x.squaredNorm(); });
  return s;
}

/// theta <- theta - lr * grad, with grad rescaled to max_norm when larger.
inline void sgd_step(Theta& theta, const Theta& grad, double lr, double max_norm = 0.0) {
  double scale = lr;
  if (max_norm > 0.0) {
    const double norm = std::sqrt(squared_norm(grad));
    if (norm > max_norm) scale *= max_norm / norm;
  }
  theta.alpha1 -= scale * grad.alpha1;
  theta.alpha2 -= scale * grad.alpha2;
  theta.alpha3 -= scale * grad.alpha3;
  theta.alpha4 -= scale * grad.alpha4;
  theta.beta1 -= scale * grad.beta1;
  theta.beta2 -= scale * grad.beta2;
  theta.beta3 -= scale * grad.beta3;
}

struct TrainLogRow {
  std::size_t episode = 0;
  std::size_t step = 0;        // global selections so far
  double loss = 0.0;           // mean batch loss over the episode's updates
  double epsilon = 0.0;        // exploration rate at the episode's last pick
  double cum_reward = 0.0;
  double wall_time = 0.0;      // seconds since training started
};

struct TrainResult {
  Theta theta;
  std::vector<TrainLogRow> log;
  std::size_t transitions = 0;
  std::size_t updates = 0;
};

/// Episodes cycle through the graphs in order. Every selection is scored with
/// a paired MC reward; once delta rewards exist the delta-step transition is
/// stored and one SGD step on a replay batch follows. The last transitions of
/// an episode are stored as terminal with the rewards that remain.
inline TrainResult train(std::span<const Graph> graphs, const TrainConfig& cfg,
                         const std::function<void(const TrainLogRow&)>& on_episode = {}) {
  cfg.validate();
  if (graphs.empty()) throw Error("no training graphs");
  for (const Graph& g : graphs) {
    if (cfg.budget > g.n()) throw Error("budget k exceeds the size of a training graph");
  }
  const auto started = std::chrono::steady_clock::now();
  TrainingSet set(graphs, cfg.embed.neighbors);
  std::vector<Propagation> props;
  props.reserve(graphs.size());
  for (const Graph& g : graphs) props.emplace_back(g, cfg.model);

  TrainResult res{init_theta(cfg.q, substream(cfg.rng_seed, "theta")), {}, 0, 0};
  Theta& theta = res.theta;
  ReplayMemory memory(cfg.replay_capacity);
  Rng policy(substream(cfg.rng_seed, "policy"));
  Rng replay(substream(cfg.rng_seed, "replay"));
  const std::uint64_t reward_seed = substream(cfg.rng_seed, "reward");
  const std::size_t k = cfg.budget;
  const std::size_t delta = cfg.delta;
  std::size_t step = 0;

  for (std::size_t episode = 0; episode < cfg.episodes; ++episode) {
    const std::size_t gi = episode % graphs.size();
    const Neighborhoods& nb = set.neighborhoods(gi);
    std::vector<NodeId> seeds;
    std::vector<double> rewards;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    double eps = cfg.eps_start;

    auto store_and_learn = [&](std::size_t j, std::size_t end) {
      Transition t;
      t.graph = gi;
      t.state_seeds.assign(seeds.begin(), seeds.begin() + static_cast<std::ptrdiff_t>(j));
      t.action = seeds[j];
      for (std::size_t r = j; r < end; ++r) t.reward_sum += rewards[r];
      t.next_seeds.assign(seeds.begin(), seeds.begin() + static_cast<std::ptrdiff_t>(end));
      t.terminal = end >= k;
      memory.push(std::move(t));
      ++res.transitions;

      auto batch = memory.sample(cfg.batch_size, replay);
      auto targets = n_step_targets(batch, theta, set, cfg.gamma, cfg.embed.iterations);
      auto lg = loss_and_grad(batch, targets, theta, set, cfg.embed.iterations);
      loss_sum += lg.loss;
      ++loss_count;
      sgd_step(theta, lg.grad, cfg.lr, cfg.max_grad_norm);
      ++res.updates;
      if (!theta.all_finite()) {
        std::ostringstream msg;
        msg << "training diverged: non-finite parameters after update " << res.updates << " (episode " << episode
            << ", batch loss " << lg.loss << ", gradient norm " << std::sqrt(squared_norm(lg.grad)) << ")";
        throw Error(msg.str());
      }
    };

    for (std::size_t i = 0; i < k; ++i) {
      auto state = embed(nb, seed_indicator(nb.n(), seeds), theta, cfg.embed.iterations);
      const Vector q = q_values(state, theta);
      eps = epsilon_at(cfg, step);
      const NodeId v = epsilon_greedy_action(q, seeds, eps, policy);
      rewards.push_back(reward(props[gi], seeds, v, cfg.reward_runs, substream(reward_seed, step), cfg.threads));
      seeds.push_back(v);
      ++step;
      if (i + 1 >= delta) store_and_learn(i + 1 - delta, i + 1);
    }
    // Terminal tail: transitions whose delta-step window runs past k.
    for (std::size_t j = (k >= delta ? k - delta + 1 : 0); j < k; ++j) store_and_learn(j, k);

    TrainLogRow row;
    row.episode = episode;
    row.step = step;
    row.loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    row.epsilon = eps;
    for (double r : rewards) row.cum_reward += r;
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    res.log.push_back(row);
    if (on_episode) on_episode(row);
  }
  return res;
}

}  // namespace disco
