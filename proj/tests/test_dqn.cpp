#include <gtest/gtest.h>

#include <map>

#include "disco/dqn.hpp"
#include "disco/generators.hpp"
#include "disco/sampling.hpp"
#include "grad_check.hpp"

using namespace disco;

namespace {

Theta random_theta(std::size_t q, Rng& rng, double lo = -0.5, double hi = 0.5) {
  Theta t = Theta::zeros(q);
  t.for_each([&](std::string_view, auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  });
  return t;
}

Graph connected_graph(std::size_t n, std::size_t extra, std::uint64_t seed) {
  // spanning path plus random chords, weights in [0.1, 1)
  Rng rng(seed);
  std::vector<Edge> e;
  std::set<std::pair<NodeId, NodeId>> used;
  for (NodeId i = 0; i + 1 < n; ++i) {
    e.push_back({i, i + 1, rng.uniform(0.1, 1.0)});
    used.insert({i, i + 1});
  }
  while (e.size() < n - 1 + extra) {
    auto u = static_cast<NodeId>(rng.index(n)), v = static_cast<NodeId>(rng.index(n));
    if (u == v) continue;
    if (!used.insert({std::min(u, v), std::max(u, v)}).second) continue;
    e.push_back({u, v, rng.uniform(0.1, 1.0)});
  }
  return Graph::from_edges(n, false, e);
}

Transition make_transition(std::vector<NodeId> state, NodeId action, double reward, std::vector<NodeId> next,
                           bool terminal) {
  Transition t;
  t.state_seeds = std::move(state);
  t.action = action;
  t.reward_sum = reward;
  t.next_seeds = std::move(next);
  t.terminal = terminal;
  return t;
}

}  // namespace

TEST(EpsilonGreedy, GreedyExamples) {
  Rng rng(1);
  Vector q(3);
  q << 0.1, 0.9, 0.3;
  EXPECT_EQ(epsilon_greedy_action(q, {}, 0.0, rng), 1u);
  Vector tie(2);
  tie << 0.5, 0.5;
  EXPECT_EQ(epsilon_greedy_action(tie, {}, 0.0, rng), 0u);
  std::vector<NodeId> seeds{1};
  EXPECT_EQ(epsilon_greedy_action(q, seeds, 0.0, rng), 2u);
  std::vector<NodeId> all{0, 1, 2};
  EXPECT_THROW(epsilon_greedy_action(q, all, 0.5, rng), Error);
}

TEST(EpsilonGreedy, UniformWhenFullyRandom) {
  // Chi-square over the 7 non-seed nodes, 10,000 draws; critical value of
  // chi2(6) at p = 0.01 is 16.812.
  Rng rng(77);
  Vector q = Vector::LinSpaced(9, 0.0, 1.0);
  std::vector<NodeId> seeds{3, 8};
  std::map<NodeId, int> count;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++count[epsilon_greedy_action(q, seeds, 1.0, rng)];
  EXPECT_EQ(count.size(), 7u);
  EXPECT_EQ(count.count(3), 0u);
  EXPECT_EQ(count.count(8), 0u);
  double chi2 = 0.0;
  const double expected = draws / 7.0;
  for (auto [v, c] : count) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 16.812);
}

TEST(EpsilonSchedule, LinearAnnealing) {
  TrainConfig cfg;
  cfg.eps_start = 1.0;
  cfg.eps_end = 0.05;
  cfg.eps_anneal_steps = 100;
  EXPECT_DOUBLE_EQ(epsilon_at(cfg, 0), 1.0);
  EXPECT_DOUBLE_EQ(epsilon_at(cfg, 50), 1.0 - 50 * 0.95 / 100);
  EXPECT_NEAR(epsilon_at(cfg, 100), 0.05, 1e-15);
  EXPECT_DOUBLE_EQ(epsilon_at(cfg, 1000), 0.05);
}

TEST(ReplayMemory, FifoEvictionAndUniformSampling) {
  ReplayMemory mem(3);
  for (NodeId i = 0; i < 4; ++i) mem.push(make_transition({}, i, 0, {i}, false));
  EXPECT_EQ(mem.size(), 3u);
  EXPECT_EQ(mem[0].action, 1u);  // the first push is gone
  EXPECT_EQ(mem[2].action, 3u);
  for (NodeId i = 4; i < 20; ++i) {
    mem.push(make_transition({}, i, 0, {i}, false));
    EXPECT_LE(mem.size(), 3u);
  }
  EXPECT_EQ(mem[0].action, 17u);

  Rng rng(5);
  std::map<NodeId, int> count;
  const int draws = 30000;
  auto batch = mem.sample(draws, rng);
  ASSERT_EQ(batch.size(), static_cast<std::size_t>(draws));
  for (const auto& t : batch) ++count[t.action];
  ASSERT_EQ(count.size(), 3u);  // with replacement: all three seen many times
  double chi2 = 0.0;
  for (auto [v, c] : count) chi2 += (c - draws / 3.0) * (c - draws / 3.0) / (draws / 3.0);
  EXPECT_LT(chi2, 9.21);  // chi2(2), p = 0.01
  ReplayMemory empty(2);
  EXPECT_THROW(empty.sample(1, rng), Error);
  EXPECT_THROW(ReplayMemory(0), Error);
}

TEST(Reward, DelegatesToMarginalGain) {
  Graph zero = Graph::from_edges(4, false, {{0, 1, 0.0}, {1, 2, 0.0}});
  std::vector<NodeId> s{0};
  EXPECT_EQ(reward(zero, DiffusionModel{}, s, 3, 50, 1), 1.0);
  EXPECT_THROW(reward(zero, DiffusionModel{}, s, 0, 50, 1), Error);
}

TEST(NStepTarget, Examples) {
  std::vector<Graph> graphs{connected_graph(8, 4, 1)};
  TrainingSet set(graphs, NeighborMode::Out);
  Theta th = init_theta(4, 2);
  Transition t = make_transition({0}, 1, 2.5, {0, 1, 2}, false);
  EXPECT_EQ(n_step_target(t, th, set, 0.0, 4), 2.5);
  EXPECT_GT(n_step_target(t, th, set, 0.9, 4), 2.5);
  t.terminal = true;
  EXPECT_EQ(n_step_target(t, th, set, 0.9, 4), 2.5);
  t.terminal = false;
  EXPECT_EQ(n_step_target(t, Theta::zeros(4), set, 0.9, 4), 2.5);
}

TEST(Loss, Examples) {
  std::vector<Graph> graphs{connected_graph(8, 4, 3)};
  TrainingSet set(graphs, NeighborMode::Out);
  Theta th = init_theta(4, 5);
  std::vector<Transition> batch{make_transition({0}, 1, 1.0, {0, 1}, true),
                                make_transition({2}, 5, 0.5, {2, 5}, true)};
  // targets equal to Q give zero loss
  std::vector<double> y;
  for (const auto& t : batch) y.push_back(q_values(graphs[0], t.state_seeds, th)(t.action));
  EXPECT_NEAR(loss(batch, y, th, set, 4), 0.0, 1e-24);

  std::vector<Transition> one{batch[0]};
  std::vector<double> target{1.0};
  EXPECT_DOUBLE_EQ(loss(one, target, Theta::zeros(4), set, 4), 1.0);

  std::vector<Transition> twice{batch[0], batch[0]};
  std::vector<double> t2{1.0, 1.0};
  const double l1 = loss(one, std::span<const double>(target), th, set, 4);
  EXPECT_NEAR(loss(twice, t2, th, set, 4), l1, 1e-14);
  EXPECT_THROW(loss(std::vector<Transition>{}, std::vector<double>{}, th, set, 4), Error);
}

TEST(Gradient, ZeroWhenAllReluInactive) {
  std::vector<Graph> graphs{connected_graph(8, 4, 3)};
  TrainingSet set(graphs, NeighborMode::Out);
  std::vector<Transition> batch{make_transition({0}, 1, 1.0, {0, 1}, true)};
  std::vector<double> y{3.0};
  Theta th = init_theta(4, 1);
  th.alpha2 = -th.alpha2;  // edge term negative
  th.alpha4 = -th.alpha4;  // seed term negative, x stays 0
  const Theta g = grad_theta(batch, y, th, set, 4);
  EXPECT_EQ(squared_norm(g), 0.0);
}

TEST(Gradient, DuplicatedBatchSameMeanGradient) {
  std::vector<Graph> graphs{connected_graph(9, 5, 8)};
  TrainingSet set(graphs, NeighborMode::Out);
  Theta th = init_theta(5, 4);
  std::vector<Transition> b1{make_transition({0}, 3, 1.0, {0, 3}, true), make_transition({}, 6, 2.0, {6}, true)};
  std::vector<Transition> b2 = b1;
  b2.insert(b2.end(), b1.begin(), b1.end());
  std::vector<double> y1{1.0, 2.0}, y2{1.0, 2.0, 1.0, 2.0};
  const Theta g1 = grad_theta(b1, y1, th, set, 4);
  const Theta g2 = grad_theta(b2, y2, th, set, 4);
  Theta diff = g1;
  sgd_step(diff, g2, 1.0);
  EXPECT_LT(std::sqrt(squared_norm(diff)), 1e-12 * (1 + std::sqrt(squared_norm(g1))));
}

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(31);
  std::vector<Graph> graphs{connected_graph(10, 8, 4), connected_graph(7, 3, 5)};
  TrainingSet set(graphs, NeighborMode::Out);
  int points = 0;
  while (points < 3) {
    Theta th = random_theta(6, rng);
    std::vector<Transition> batch{make_transition({0, 4}, 2, 0, {}, true), make_transition({}, 5, 0, {}, true),
                                  make_transition({1}, 3, 0, {}, true)};
    batch[2].graph = 1;
    if (gradcheck::near_kink(batch, th, set, 4)) continue;
    std::vector<double> y;
    for (const auto& t : batch) {
      y.push_back(q_values(embed(set.neighborhoods(t.graph), seed_indicator(set.neighborhoods(t.graph).n(),
                                                                              t.state_seeds),
                                 th, 4),
                           th)(t.action) +
                  rng.uniform(-1.0, 1.0));
    }
    for (int c = 0; c < 20; ++c) {
      const auto idx = rng.index(th.parameter_count());
      auto r = gradcheck::check(batch, y, th, set, 4, idx);
      EXPECT_LE(r.rel_error, 1e-4) << "coordinate " << idx << " analytic " << r.analytic << " numeric " << r.numeric;
    }
    ++points;
  }
}

TEST(Sgd, StepAndClipping) {
  Theta th = Theta::zeros(2), g = Theta::zeros(2);
  g.alpha3 << 3.0, 4.0;  // norm 5
  sgd_step(th, g, 0.1);
  EXPECT_DOUBLE_EQ(th.alpha3(0), -0.3);
  Theta c = Theta::zeros(2);
  sgd_step(c, g, 0.1, 1.0);
  EXPECT_NEAR(c.alpha3(0), -0.1 * 3.0 / 5.0, 1e-15);
  EXPECT_NEAR(c.alpha3(1), -0.1 * 4.0 / 5.0, 1e-15);
}

namespace {

std::vector<Graph> small_training_set() {
  Graph big = preferential_attachment(300, 2, 0.1, 3);
  SampleSpec spec;
  spec.fraction = 0.1;
  spec.rng_seed = 4;
  return sample_many(big, spec, 3);
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.episodes = 6;
  cfg.budget = 5;
  cfg.batch_size = 8;
  cfg.delta = 2;
  cfg.q = 6;
  cfg.reward_runs = 20;
  cfg.eps_anneal_steps = 20;
  cfg.lr = 0.001;
  cfg.max_grad_norm = 10.0;
  cfg.rng_seed = 9;
  return cfg;
}

}  // namespace

TEST(Train, ZeroEpisodesReturnsInitTheta) {
  auto graphs = small_training_set();
  TrainConfig cfg = quick_config();
  cfg.episodes = 0;
  auto r = train(graphs, cfg);
  EXPECT_TRUE(r.theta == init_theta(cfg.q, substream(cfg.rng_seed, "theta")));
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, ZeroLearningRateKeepsThetaButLogs) {
  auto graphs = small_training_set();
  TrainConfig cfg = quick_config();
  cfg.lr = 0.0;
  auto r = train(graphs, cfg);
  EXPECT_TRUE(r.theta == init_theta(cfg.q, substream(cfg.rng_seed, "theta")));
  ASSERT_EQ(r.log.size(), cfg.episodes);
  EXPECT_EQ(r.transitions, cfg.episodes * cfg.budget);
  EXPECT_EQ(r.updates, r.transitions);
  for (const auto& row : r.log) {
    EXPECT_GT(row.loss, 0.0);
    EXPECT_GT(row.cum_reward, 0.0);
  }
  EXPECT_EQ(r.log.back().step, cfg.episodes * cfg.budget);
}

TEST(Train, DeltaLargerThanBudgetStoresTailOnly) {
  auto graphs = small_training_set();
  TrainConfig cfg = quick_config();
  cfg.delta = 8;
  auto r = train(graphs, cfg);
  EXPECT_EQ(r.transitions, cfg.episodes * cfg.budget);
}

TEST(Train, DeterministicSingleThreaded) {
  auto graphs = small_training_set();
  TrainConfig cfg = quick_config();
  auto a = train(graphs, cfg);
  auto b = train(graphs, cfg);
  EXPECT_TRUE(a.theta == b.theta);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].loss, b.log[i].loss);
    EXPECT_EQ(a.log[i].cum_reward, b.log[i].cum_reward);
  }
  cfg.threads = 3;  // counter-based simulation keeps rewards identical
  auto c = train(graphs, cfg);
  EXPECT_TRUE(a.theta == c.theta);
}

TEST(Train, Errors) {
  auto graphs = small_training_set();
  TrainConfig cfg = quick_config();
  EXPECT_THROW(train(std::vector<Graph>{}, cfg), Error);
  cfg.budget = 1000;
  EXPECT_THROW(train(graphs, cfg), Error);
  cfg = quick_config();
  cfg.gamma = 1.0;
  EXPECT_THROW(train(graphs, cfg), Error);
  cfg = quick_config();
  cfg.eps_end = 0.5;
  cfg.eps_start = 0.2;
  EXPECT_THROW(train(graphs, cfg), Error);
}

TEST(Train, DivergenceAbortsWithDiagnostics) {
  auto graphs = small_training_set();
  TrainConfig cfg = quick_config();
  cfg.lr = 1e200;
  cfg.max_grad_norm = 0.0;
  try {
    train(graphs, cfg);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("diverged"), std::string::npos) << e.what();
  }
}

TEST(Train, SmokeLearningSignal) {
  // 50 episodes on a 30-node BFS sample, k = 5: the mean cumulative reward of
  // the last 10 episodes should not fall below the first 10, for most seeds.
  Graph big = preferential_attachment(300, 1, 0.1, 21);
  SampleSpec spec;
  spec.fraction = 0.1;
  spec.rng_seed = 22;
  std::vector<Graph> graphs{sample_subgraph(big, spec)};
  ASSERT_EQ(graphs[0].n(), 30u);
  int passed = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig cfg;
    cfg.episodes = 50;
    cfg.budget = 5;
    cfg.q = 16;
    cfg.lr = 0.01;
    cfg.max_grad_norm = 10.0;
    cfg.eps_anneal_steps = 200;
    cfg.rng_seed = seed;
    auto r = train(graphs, cfg);
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
      first += r.log[i].cum_reward;
      last += r.log[40 + i].cum_reward;
    }
    passed += last >= first;

    // gradient check at the trained parameters, on a batch from this graph
    TrainingSet set(graphs, cfg.embed.neighbors);
    Rng rng(seed);
    std::vector<Transition> batch{make_transition({}, 3, 0, {}, true), make_transition({0, 7}, 11, 0, {}, true)};
    if (!gradcheck::near_kink(batch, r.theta, set, 4)) {
      std::vector<double> y{1.0, 2.0};
      for (int c = 0; c < 5; ++c) {
        auto res = gradcheck::check(batch, y, r.theta, set, 4, rng.index(r.theta.parameter_count()));
        EXPECT_LE(res.rel_error, 1e-4);
      }
    }
  }
  EXPECT_GE(passed, 3);
}
