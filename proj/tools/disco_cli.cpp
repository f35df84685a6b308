#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "disco/disco.hpp"

using namespace disco;
namespace fs = std::filesystem;

namespace {

struct GraphArgs {
  std::string path;
  bool directed = false;
  double weight = 0.5;
  std::string diffusion = "ic";
  bool lt_renormalize = false;

  void add(CLI::App* app) {
    app->add_option("-g,--graph", path, "edge-list file")->required()->check(CLI::ExistingFile);
    app->add_flag("--directed", directed, "treat edges as directed arcs");
    app->add_option("--weight", weight, "weight for edges without one")->capture_default_str();
    app->add_option("--diffusion", diffusion, "ic or lt")->capture_default_str();
    app->add_flag("--lt-renormalize", lt_renormalize, "rescale LT in-weights that sum above 1");
  }
  Graph load() const { return load_edge_list_file(path, directed, weight); }
  DiffusionModel model() const { return {parse_model_kind(diffusion), lt_renormalize}; }
};

struct TrainArgs {
  std::size_t episodes = 100, budget = 10, batch = 64, delta = 5, q = 64, reward_runs = 100;
  std::size_t anneal = 10000, replay = 10000;
  int iterations = 4;
  double lr = 0.001, gamma = 0.99, eps_start = 1.0, eps_end = 0.05, clip = 0.0;
  std::string neighbors = "out";
  std::uint64_t seed = 1;

  void add(CLI::App* app) {
    app->add_option("--episodes", episodes)->capture_default_str();
    app->add_option("--budget", budget, "k per episode")->capture_default_str();
    app->add_option("--batch", batch)->capture_default_str();
    app->add_option("--delta", delta, "n-step horizon")->capture_default_str();
    app->add_option("--q", q, "embedding dimension")->capture_default_str();
    app->add_option("--iterations", iterations, "embedding rounds")->capture_default_str();
    app->add_option("--neighbors", neighbors, "out, in or both")->capture_default_str();
    app->add_option("--lr", lr)->capture_default_str();
    app->add_option("--gamma", gamma)->capture_default_str();
    app->add_option("--eps-start", eps_start)->capture_default_str();
    app->add_option("--eps-end", eps_end)->capture_default_str();
    app->add_option("--eps-anneal", anneal, "annealing steps")->capture_default_str();
    app->add_option("--reward-runs", reward_runs)->capture_default_str();
    app->add_option("--replay", replay, "replay capacity")->capture_default_str();
    app->add_option("--clip", clip, "max gradient norm (0 = off)")->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
  }
  TrainConfig make(DiffusionModel model, unsigned threads) const {
    TrainConfig t;
    t.episodes = episodes;
    t.budget = budget;
    t.batch_size = batch;
    t.delta = delta;
    t.q = q;
    t.embed = {iterations, parse_neighbor_mode(neighbors)};
    t.lr = lr;
    t.gamma = gamma;
    t.eps_start = eps_start;
    t.eps_end = eps_end;
    t.eps_anneal_steps = anneal;
    t.reward_runs = reward_runs;
    t.replay_capacity = replay;
    t.max_grad_norm = clip;
    t.model = model;
    t.rng_seed = seed;
    t.threads = threads;
    return t;
  }
};

std::string num(double x) { return detail::format_double(x); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"disco: influence maximization with learned node embeddings"};
  app.require_subcommand(0, 1);
  bool help_formats = false;
  unsigned threads = 1;
  app.add_flag("--help-formats", help_formats, "describe file formats and CSV columns");
  app.add_option("--threads", threads, "simulation threads")->capture_default_str();

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic preferential-attachment graph");
  std::size_t gen_n = 1000, gen_attach = 2;
  double gen_weight = 0.1;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("-n,--nodes", gen_n)->capture_default_str();
  gen->add_option("--attach", gen_attach, "edges per new node")->capture_default_str();
  gen->add_option("--weight", gen_weight)->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("-o,--out", gen_out)->required();

  // sample
  auto* sample = app.add_subcommand("sample", "draw subgraph samples");
  GraphArgs sample_g;
  sample_g.add(sample);
  std::string sample_method = "bfs", sample_dir;
  double sample_fraction = 0.1, sample_flyback = 0.15;
  std::size_t sample_count = 1, sample_limit = 3;
  std::uint64_t sample_seed = 1;
  sample->add_option("--method", sample_method, "bfs, srw, rwf, isrw or sb")->capture_default_str();
  sample->add_option("--fraction", sample_fraction)->capture_default_str();
  sample->add_option("--count", sample_count)->capture_default_str();
  sample->add_option("--flyback", sample_flyback)->capture_default_str();
  sample->add_option("--snowball-limit", sample_limit)->capture_default_str();
  sample->add_option("--seed", sample_seed)->capture_default_str();
  sample->add_option("-o,--out-dir", sample_dir)->required();

  // train
  auto* trainc = app.add_subcommand("train", "train theta on one or more graphs");
  std::vector<std::string> train_graphs;
  bool train_directed = false, train_renorm = false;
  double train_weight = 0.5;
  std::string train_diffusion = "ic", train_model_out, train_log;
  TrainArgs targs;
  trainc->add_option("-g,--graph", train_graphs, "training graph (repeatable)")->required()->check(CLI::ExistingFile);
  trainc->add_flag("--directed", train_directed);
  trainc->add_option("--weight", train_weight)->capture_default_str();
  trainc->add_option("--diffusion", train_diffusion)->capture_default_str();
  trainc->add_flag("--lt-renormalize", train_renorm);
  targs.add(trainc);
  trainc->add_option("-o,--model-out", train_model_out)->required();
  trainc->add_option("--log", train_log, "train log CSV path");

  // select
  auto* select = app.add_subcommand("select", "choose k seeds");
  GraphArgs select_g;
  select_g.add(select);
  std::string select_model, select_method = "topk";
  std::size_t select_k = 10, select_runs = 1000;
  std::uint64_t select_seed = 1;
  select->add_option("-m,--model", select_model, "model file (topk, iterative)");
  select->add_option("-k", select_k)->capture_default_str();
  select->add_option("--method", select_method, "topk, iterative, celf or random")->capture_default_str();
  select->add_option("--runs", select_runs, "MC runs per CELF evaluation")->capture_default_str();
  select->add_option("--seed", select_seed)->capture_default_str();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Monte-Carlo spread of a seed set");
  GraphArgs eval_g;
  eval_g.add(evaluate);
  std::string eval_seeds;
  std::size_t eval_runs = 10000;
  std::uint64_t eval_seed = 1;
  evaluate->add_option("-s,--seeds", eval_seeds, "';'-separated node ids")->required();
  evaluate->add_option("--runs", eval_runs)->capture_default_str();
  evaluate->add_option("--seed", eval_seed)->capture_default_str();

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact spread by live-edge enumeration (tiny graphs)");
  GraphArgs oracle_g;
  oracle_g.add(oracle);
  std::string oracle_seeds;
  oracle->add_option("-s,--seeds", oracle_seeds)->required();

  // stability
  auto* stab = app.add_subcommand("stability", "top-k vs iterative re-embedding report");
  GraphArgs stab_g;
  stab_g.add(stab);
  std::string stab_model;
  std::size_t stab_k = 10, stab_runs = 10000, stab_pairs = 10000;
  std::uint64_t stab_seed = 1;
  stab->add_option("-m,--model", stab_model)->required()->check(CLI::ExistingFile);
  stab->add_option("-k", stab_k)->capture_default_str();
  stab->add_option("--runs", stab_runs)->capture_default_str();
  stab->add_option("--pairs", stab_pairs, "pair sample size on large graphs")->capture_default_str();
  stab->add_option("--seed", stab_seed)->capture_default_str();

  // compare
  auto* compare = app.add_subcommand("compare", "spread of several selection methods");
  GraphArgs cmp_g;
  cmp_g.add(compare);
  std::string cmp_model, cmp_methods = "topk,iterative,celf,random", cmp_ks = "10";
  std::size_t cmp_runs = 10000, cmp_celf_runs = 1000;
  std::uint64_t cmp_seed = 1;
  compare->add_option("-m,--model", cmp_model)->required()->check(CLI::ExistingFile);
  compare->add_option("-k", cmp_ks, "comma-separated k values")->capture_default_str();
  compare->add_option("--methods", cmp_methods)->capture_default_str();
  compare->add_option("--runs", cmp_runs)->capture_default_str();
  compare->add_option("--celf-runs", cmp_celf_runs)->capture_default_str();
  compare->add_option("--seed", cmp_seed)->capture_default_str();

  // evolve
  auto* evolve = app.add_subcommand("evolve", "train on snapshots, evaluate on the final one");
  std::string evo_series, evo_config, evo_out;
  bool evo_monotone = false;
  evolve->add_option("--series", evo_series, "snapshot series file")->required()->check(CLI::ExistingFile);
  evolve->add_option("-c,--config", evo_config, "experiment config (graph key ignored)")->check(CLI::ExistingFile);
  evolve->add_flag("--monotone", evo_monotone, "require every snapshot to contain its predecessor");
  evolve->add_option("-o,--out", evo_out, "CSV path (stdout when omitted)");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "sample, train, select, evaluate and report in one run");
  std::string pipe_config, pipe_out;
  pipe->add_option("-c,--config", pipe_config)->required()->check(CLI::ExistingFile);
  pipe->add_option("-o,--out", pipe_out, "output directory (overrides config)");

  CLI11_PARSE(app, argc, argv);

  if (help_formats) {
    std::cout << formats_help();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 0;
  }

  try {
    if (*gen) {
      Graph g = preferential_attachment(gen_n, gen_attach, gen_weight, gen_seed);
      std::ofstream out(gen_out);
      if (!out) throw Error("cannot write " + gen_out);
      write_edge_list(out, g);
    } else if (*sample) {
      const Graph g = sample_g.load();
      SampleSpec spec;
      spec.method = parse_sample_method(sample_method);
      spec.fraction = sample_fraction;
      spec.flyback_p = sample_flyback;
      spec.snowball_limit = sample_limit;
      spec.rng_seed = sample_seed;
      auto samples = sample_many(g, spec, sample_count);
      fs::create_directories(sample_dir);
      std::cout << "sample,nodes,edges,degree_d,clustering_d,path\n";
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const fs::path path = fs::path(sample_dir) / ("sample_" + std::to_string(i) + ".txt");
        std::ofstream out(path);
        write_edge_list(out, samples[i]);
        write_sample_sidecar(out, g, samples[i]);
        std::cout << i << ',' << samples[i].n() << ',' << samples[i].m() << ','
                  << num(degree_d_statistic(g, samples[i])) << ',' << num(clustering_d_statistic(g, samples[i]))
                  << ',' << path.string() << '\n';
      }
    } else if (*trainc) {
      std::vector<Graph> graphs;
      for (const auto& p : train_graphs) graphs.push_back(load_edge_list_file(p, train_directed, train_weight));
      TrainConfig cfg = targs.make({parse_model_kind(train_diffusion), train_renorm}, threads);
      std::ofstream log;
      if (!train_log.empty()) {
        log.open(train_log);
        if (!log) throw Error("cannot write " + train_log);
        log << "episode,step,loss,epsilon,cum_reward,wall_time\n";
      }
      TrainResult r = train(graphs, cfg, [&](const TrainLogRow& row) {
        if (log.is_open()) {
          log << row.episode << ',' << row.step << ',' << num(row.loss) << ',' << num(row.epsilon) << ','
              << num(row.cum_reward) << ',' << num(row.wall_time) << '\n';
        }
      });
      save_model_file(train_model_out, {r.theta, cfg.embed});
      std::cerr << "trained " << cfg.episodes << " episodes, " << r.transitions << " transitions, " << r.updates
                << " updates\n";
    } else if (*select) {
      const Graph g = select_g.load();
      SelectionMethod m = parse_selection_method(select_method);
      SeedSet s;
      const auto t0 = std::chrono::steady_clock::now();
      if (m == SelectionMethod::TopK || m == SelectionMethod::Iterative) {
        if (select_model.empty()) throw Error("--model is required for " + select_method);
        Model model = load_model_file(select_model);
        s = m == SelectionMethod::TopK ? select_topk(g, model.theta, select_k, model.options)
                                       : select_iterative(g, model.theta, select_k, model.options);
      } else if (m == SelectionMethod::Celf) {
        s = celf_greedy_mc(g, select_g.model(), select_k, select_runs, select_seed, threads);
      } else {
        Rng rng(select_seed);
        s = random_seeds(g.n(), select_k, rng);
      }
      const double secs = seconds_since(t0);
      std::cout << "rank,node,q\n";
      for (std::size_t i = 0; i < s.size(); ++i) {
        std::cout << i + 1 << ',' << g.external_id(s.nodes[i]) << ',' << num(s.score[i]) << '\n';
      }
      std::cerr << to_string(m) << " k=" << select_k << " seeds " << join_seeds(g, s.nodes) << " in " << num(secs)
                << " s\n";
    } else if (*evaluate) {
      const Graph g = eval_g.load();
      auto seeds = parse_seeds(g, eval_seeds);
      const auto t0 = std::chrono::steady_clock::now();
      SpreadEstimate e = estimate_spread(g, eval_g.model(), seeds, eval_runs, eval_seed, threads);
      std::cout << "seeds,spread_mean,spread_stderr,runs,wall_time\n"
                << join_seeds(g, seeds) << ',' << num(e.mean) << ',' << num(e.std_error) << ',' << e.runs << ','
                << num(seconds_since(t0)) << '\n';
    } else if (*oracle) {
      const Graph g = oracle_g.load();
      auto seeds = parse_seeds(g, oracle_seeds);
      std::cout << "seeds,spread\n" << join_seeds(g, seeds) << ',' << num(exact_spread(g, oracle_g.model(), seeds)) << '\n';
    } else if (*stab) {
      const Graph g = stab_g.load();
      Model model = load_model_file(stab_model);
      StabilityOptions so;
      so.model = stab_g.model();
      so.spread_runs = stab_runs;
      so.pair_sample = stab_pairs;
      so.rng_seed = stab_seed;
      so.threads = threads;
      StabilityReport r = stability_report(g, model.theta, stab_k, model.options, so);
      double max_gap = 0.0;
      for (const auto& ins : r.insertions) max_gap = std::max(max_gap, ins.gap_max);
      std::cout << "k,delta_rank,delta_inf,claim_bound,proof_bound,observed_gap,max_gap,insertions,spread_topk,"
                   "spread_iterative\n"
                << stab_k << ',' << num(r.delta_rank) << ',' << num(r.delta_inf) << ',' << num(r.claim_bound) << ','
                << num(r.proof_bound) << ',' << num(r.observed_gap) << ',' << num(max_gap) << ','
                << r.insertions.size() << ',' << num(r.spread_topk.mean) << ',' << num(r.spread_iterative.mean)
                << '\n';
    } else if (*compare) {
      const Graph g = cmp_g.load();
      Model model = load_model_file(cmp_model);
      ExperimentConfig cfg;
      cfg.model = cmp_g.model();
      cfg.train.embed = model.options;
      cfg.celf_runs = cmp_celf_runs;
      cfg.rng_seed = cmp_seed;
      cfg.threads = threads;
      const Propagation prop(g, cfg.model);
      std::cout << "method,k,spread_mean,spread_stderr,runs,wall_time,seeds\n";
      for (const auto& ms : split_list(cmp_methods)) {
        SelectionMethod m = parse_selection_method(ms);
        for (const auto& ks : split_list(cmp_ks)) {
          std::size_t k = 0;
          if (!detail::parse_number(ks, k)) throw Error("bad k '" + ks + "'");
          const auto t0 = std::chrono::steady_clock::now();
          SeedSet s = select_with_method(g, m, k, model.theta, cfg);
          const double secs = seconds_since(t0);
          SpreadEstimate e = estimate_spread(prop, s.nodes, cmp_runs, substream(cmp_seed, "eval"), threads);
          std::cout << to_string(m) << ',' << k << ',' << num(e.mean) << ',' << num(e.std_error) << ',' << e.runs
                    << ',' << num(secs) << ',' << join_seeds(g, s.nodes) << '\n';
        }
      }
    } else if (*evolve) {
      ExperimentConfig cfg;
      if (!evo_config.empty()) cfg = ExperimentConfig::from_file(evo_config);
      cfg.threads = threads;
      SnapshotSeries series = SnapshotSeries::parse_file(evo_series);
      series.monotone = evo_monotone;
      auto rows = run_evolution(series, cfg);
      if (evo_out.empty()) {
        write_evolution_csv(std::cout, rows);
      } else {
        std::ofstream out(evo_out);
        if (!out) throw Error("cannot write " + evo_out);
        write_evolution_csv(out, rows);
      }
    } else if (*pipe) {
      ExperimentConfig cfg = ExperimentConfig::from_file(pipe_config);
      if (!pipe_out.empty()) cfg.out = pipe_out;
      if (app.count("--threads")) cfg.threads = threads;
      auto dir = run_pipeline(cfg, [](const std::string& stage) { std::cerr << "[" << stage << "]\n"; });
      std::cerr << "artifacts in " << dir.string() << " (config " << cfg.hash() << ")\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
