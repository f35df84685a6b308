#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "disco/config.hpp"
#include "disco/diffusion.hpp"
#include "disco/dqn.hpp"
#include "disco/embedding.hpp"
#include "disco/error.hpp"
#include "disco/graph.hpp"
#include "disco/rng.hpp"
#include "disco/sampling.hpp"
#include "disco/selection.hpp"

namespace disco {

/// Error raised inside a pipeline stage; the message is prefixed with the stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct ExperimentConfig {
  std::string graph;
  bool directed = false;
  double weight = 0.5;
  DiffusionModel model;
  SampleSpec sampler;
  std::size_t samples = 20;
  TrainConfig train;
  std::vector<std::size_t> ks{10};
  std::vector<SelectionMethod> methods{SelectionMethod::TopK, SelectionMethod::Iterative, SelectionMethod::Celf,
                                       SelectionMethod::Random};
  std::size_t eval_runs = 10000;
  std::size_t celf_runs = 1000;
  bool stability = true;
  std::size_t stability_pairs = 10000;
  std::uint64_t rng_seed = 1;
  unsigned threads = 1;
  bool deterministic = true;  // write 0 for wall-clock columns
  std::string out = "disco-out";

  static ExperimentConfig from_kv(const KeyValues& kv) {
    static const std::vector<std::string> known = {
        "graph", "directed", "weight", "model", "lt_renormalize", "sampler", "fraction", "samples", "flyback",
        "snowball_limit", "episodes", "budget", "batch", "delta", "gamma", "lr", "eps_start", "eps_end",
        "eps_anneal_steps", "reward_runs", "replay_capacity", "max_grad_norm", "q", "iterations", "neighbors",
        "k", "methods", "eval_runs", "celf_runs", "stability", "stability_pairs", "seed", "threads",
        "deterministic", "out"};
    for (const auto& [key, value] : kv.values()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) throw Error("unknown config key '" + key + "'");
    }
    ExperimentConfig c;
    c.graph = kv.get("graph", "");
    c.directed = kv.flag("directed", c.directed);
    c.weight = kv.number("weight", c.weight);
    c.model.kind = parse_model_kind(kv.get("model", std::string(to_string(c.model.kind))));
    c.model.lt_renormalize = kv.flag("lt_renormalize", c.model.lt_renormalize);
    c.sampler.method = parse_sample_method(kv.get("sampler", std::string(to_string(c.sampler.method))));
    c.sampler.fraction = kv.number("fraction", c.sampler.fraction);
    c.samples = kv.number("samples", c.samples);
    c.sampler.flyback_p = kv.number("flyback", c.sampler.flyback_p);
    c.sampler.snowball_limit = kv.number("snowball_limit", c.sampler.snowball_limit);
    TrainConfig& t = c.train;
    t.episodes = kv.number("episodes", t.episodes);
    t.budget = kv.number("budget", t.budget);
    t.batch_size = kv.number("batch", t.batch_size);
    t.delta = kv.number("delta", t.delta);
    t.gamma = kv.number("gamma", t.gamma);
    t.lr = kv.number("lr", t.lr);
    t.eps_start = kv.number("eps_start", t.eps_start);
    t.eps_end = kv.number("eps_end", t.eps_end);
    t.eps_anneal_steps = kv.number("eps_anneal_steps", t.eps_anneal_steps);
    t.reward_runs = kv.number("reward_runs", t.reward_runs);
    t.replay_capacity = kv.number("replay_capacity", t.replay_capacity);
    t.max_grad_norm = kv.number("max_grad_norm", t.max_grad_norm);
    t.q = kv.number("q", t.q);
    t.embed.iterations = kv.number("iterations", t.embed.iterations);
    t.embed.neighbors = parse_neighbor_mode(kv.get("neighbors", std::string(to_string(t.embed.neighbors))));
    if (kv.has("k")) {
      c.ks.clear();
      for (const auto& s : split_list(kv.get("k", ""))) {
        std::size_t k = 0;
        if (!detail::parse_number(s, k)) throw Error("config key 'k': bad value '" + s + "'");
        c.ks.push_back(k);
      }
    }
    if (kv.has("methods")) {
      c.methods.clear();
      for (const auto& s : split_list(kv.get("methods", ""))) c.methods.push_back(parse_selection_method(s));
    }
    c.eval_runs = kv.number("eval_runs", c.eval_runs);
    c.celf_runs = kv.number("celf_runs", c.celf_runs);
    c.stability = kv.flag("stability", c.stability);
    c.stability_pairs = kv.number("stability_pairs", c.stability_pairs);
    c.rng_seed = kv.number("seed", c.rng_seed);
    c.threads = kv.number("threads", c.threads);
    c.deterministic = kv.flag("deterministic", c.deterministic);
    c.out = kv.get("out", c.out);
    return c;
  }

  /// Relative graph paths resolve against the config file's directory.
  static ExperimentConfig from_file(const std::string& path) {
    ExperimentConfig c = from_kv(KeyValues::parse_file(path));
    std::filesystem::path g(c.graph);
    if (!c.graph.empty() && g.is_relative()) c.graph = (std::filesystem::path(path).parent_path() / g).string();
    return c;
  }

  /// Every result-affecting setting, normalized. `out` and `threads` are left
  /// out: neither changes any CSV value.
  KeyValues to_kv() const {
    KeyValues kv;
    auto num = [](double x) { return detail::format_double(x); };
    kv.set("graph", graph);
    kv.set("directed", directed ? "true" : "false");
    kv.set("weight", num(weight));
    kv.set("model", std::string(to_string(model.kind)));
    kv.set("lt_renormalize", model.lt_renormalize ? "true" : "false");
    kv.set("sampler", std::string(to_string(sampler.method)));
    kv.set("fraction", num(sampler.fraction));
    kv.set("samples", std::to_string(samples));
    kv.set("flyback", num(sampler.flyback_p));
    kv.set("snowball_limit", std::to_string(sampler.snowball_limit));
    kv.set("episodes", std::to_string(train.episodes));
    kv.set("budget", std::to_string(train.budget));
    kv.set("batch", std::to_string(train.batch_size));
    kv.set("delta", std::to_string(train.delta));
    kv.set("gamma", num(train.gamma));
    kv.set("lr", num(train.lr));
    kv.set("eps_start", num(train.eps_start));
    kv.set("eps_end", num(train.eps_end));
    kv.set("eps_anneal_steps", std::to_string(train.eps_anneal_steps));
    kv.set("reward_runs", std::to_string(train.reward_runs));
    kv.set("replay_capacity", std::to_string(train.replay_capacity));
    kv.set("max_grad_norm", num(train.max_grad_norm));
    kv.set("q", std::to_string(train.q));
    kv.set("iterations", std::to_string(train.embed.iterations));
    kv.set("neighbors", std::string(to_string(train.embed.neighbors)));
    std::string klist;
    for (std::size_t i = 0; i < ks.size(); ++i) klist += (i ? "," : "") + std::to_string(ks[i]);
    kv.set("k", klist);
    std::string mlist;
    for (std::size_t i = 0; i < methods.size(); ++i) mlist += (i ? "," : "") + std::string(to_string(methods[i]));
    kv.set("methods", mlist);
    kv.set("eval_runs", std::to_string(eval_runs));
    kv.set("celf_runs", std::to_string(celf_runs));
    kv.set("stability", stability ? "true" : "false");
    kv.set("stability_pairs", std::to_string(stability_pairs));
    kv.set("seed", std::to_string(rng_seed));
    kv.set("deterministic", deterministic ? "true" : "false");
    return kv;
  }

  /// 16 hex digits of FNV-1a over the canonical config text.
  std::string hash() const { return hex16(fnv1a(to_kv().canonical())); }

  void validate() const {
    if (graph.empty()) throw Error("config needs 'graph'");
    if (!std::filesystem::exists(graph)) throw Error("graph file '" + graph + "' does not exist");
    if (!(weight >= 0.0 && weight <= 1.0)) throw Error("weight must lie in [0,1]");
    sampler.validate();
    train.validate();
    if (ks.empty()) throw Error("k list is empty");
    if (methods.empty()) throw Error("methods list is empty");
    if (eval_runs < 2) throw Error("eval_runs must be >= 2");
    if (celf_runs < 1) throw Error("celf_runs must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// CSV layouts shared by the pipeline and the CLI.

inline constexpr std::string_view kSamplesHeader = "config_hash,sample,nodes,edges,degree_d,clustering_d";
inline constexpr std::string_view kTrainLogHeader = "config_hash,episode,step,loss,epsilon,cum_reward,wall_time";
inline constexpr std::string_view kSeedsHeader = "config_hash,method,k,seeds,wall_time";
inline constexpr std::string_view kCompareHeader = "config_hash,method,k,spread_mean,spread_stderr,runs";
inline constexpr std::string_view kStabilityHeader =
    "config_hash,k,delta_rank,delta_inf,claim_bound,proof_bound,observed_gap,max_gap,insertions,spread_topk,"
    "spread_iterative";
inline constexpr std::string_view kEvolutionHeader = "config_hash,train_snapshot,k,spread_mean,spread_stderr";

/// ';'-joined external ids.
inline std::string join_seeds(const Graph& g, std::span<const NodeId> seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(g.external_id(seeds[i]));
  }
  return s;
}

/// Inverse of join_seeds; unknown ids are an error.
inline std::vector<NodeId> parse_seeds(const Graph& g, std::string_view text) {
  std::vector<NodeId> out;
  for (const auto& tok : split_list(text, ';')) {
    ExternalId x = 0;
    if (!detail::parse_number(tok, x)) throw Error("bad seed id '" + tok + "'");
    auto v = g.find(x);
    if (!v) throw Error("seed id " + tok + " is not a node of the graph");
    out.push_back(*v);
  }
  return out;
}

inline TrainResult train_with_config(std::span<const Graph> graphs, const ExperimentConfig& cfg,
                                     const std::function<void(const TrainLogRow&)>& on_episode = {}) {
  TrainConfig tc = cfg.train;
  tc.model = cfg.model;
  tc.rng_seed = substream(cfg.rng_seed, "train");
  tc.threads = cfg.threads;
  return train(graphs, tc, on_episode);
}

inline SeedSet select_with_method(const Graph& g, SelectionMethod method, std::size_t k, const Theta& theta,
                                  const ExperimentConfig& cfg) {
  switch (method) {
    case SelectionMethod::TopK: return select_topk(g, theta, k, cfg.train.embed);
    case SelectionMethod::Iterative: return select_iterative(g, theta, k, cfg.train.embed);
    case SelectionMethod::Celf:
      return celf_greedy_mc(g, cfg.model, k, cfg.celf_runs, substream(cfg.rng_seed, "celf"), cfg.threads);
    case SelectionMethod::Random: {
      Rng rng(substream(substream(cfg.rng_seed, "random"), k));
      return random_seeds(g.n(), k, rng);
    }
  }
  throw Error("unknown selection method");
}

namespace detail {

inline std::string csv_number(double x) { return format_double(x); }

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Runs sample -> train -> select -> evaluate -> stability and writes every
/// artifact into cfg.out. Work happens in cfg.out/.staging; on success the
/// files are moved into cfg.out, on failure the staging directory becomes
/// cfg.out/quarantine (with error.txt) and a StageError is thrown.
inline std::filesystem::path run_pipeline(const ExperimentConfig& cfg,
                                          const std::function<void(const std::string&)>& progress = {}) {
  namespace fs = std::filesystem;
  const fs::path out = cfg.out;
  const fs::path staging = out / ".staging";
  const std::string hash = cfg.hash();
  std::string stage = "config";
  auto begin = [&](const char* name) {
    stage = name;
    if (progress) progress(stage);
  };
  auto wall = [&](std::chrono::steady_clock::time_point t0) {
    if (cfg.deterministic) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  try {
    begin("config");
    cfg.validate();
    fs::create_directories(out);
    fs::remove_all(staging);
    fs::create_directories(staging / "samples");
    const Graph g = load_edge_list_file(cfg.graph, cfg.directed, cfg.weight);
    for (std::size_t k : cfg.ks) {
      if (k > g.n()) throw Error("k=" + std::to_string(k) + " exceeds graph size " + std::to_string(g.n()));
    }

    begin("sample");
    SampleSpec spec = cfg.sampler;
    spec.rng_seed = substream(cfg.rng_seed, "sample");
    std::vector<Graph> samples = sample_many(g, spec, cfg.samples);
    std::string samples_csv = std::string(kSamplesHeader) + "\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "sample_%03zu.txt", i);
      std::ofstream f(staging / "samples" / name, std::ios::binary);
      write_edge_list(f, samples[i]);
      write_sample_sidecar(f, g, samples[i]);
      if (!f) throw Error("cannot write sample file");
      samples_csv += hash + "," + std::to_string(i) + "," + std::to_string(samples[i].n()) + "," +
                     std::to_string(samples[i].m()) + "," +
                     detail::csv_number(degree_d_statistic(g, samples[i])) + "," +
                     detail::csv_number(clustering_d_statistic(g, samples[i])) + "\n";
    }
    detail::write_text(staging / "samples.csv", samples_csv);

    begin("train");
    if (samples.empty() && cfg.train.episodes > 0) throw Error("training needs samples > 0");
    std::string log_csv = std::string(kTrainLogHeader) + "\n";
    TrainResult trained = train_with_config(samples, cfg, [&](const TrainLogRow& r) {
      log_csv += hash + "," + std::to_string(r.episode) + "," + std::to_string(r.step) + "," +
                 detail::csv_number(r.loss) + "," + detail::csv_number(r.epsilon) + "," +
                 detail::csv_number(r.cum_reward) + "," + detail::csv_number(cfg.deterministic ? 0.0 : r.wall_time) +
                 "\n";
    });
    detail::write_text(staging / "train_log.csv", log_csv);
    Model model{trained.theta, cfg.train.embed};
    save_model_file((staging / "model.txt").string(), model);

    begin("select");
    std::string seeds_csv = std::string(kSeedsHeader) + "\n";
    std::vector<std::tuple<SelectionMethod, std::size_t, SeedSet>> picks;
    for (SelectionMethod m : cfg.methods) {
      for (std::size_t k : cfg.ks) {
        const auto t0 = std::chrono::steady_clock::now();
        SeedSet s = select_with_method(g, m, k, trained.theta, cfg);
        const double secs = wall(t0);
        seeds_csv += hash + "," + std::string(to_string(m)) + "," + std::to_string(k) + "," +
                     join_seeds(g, s.nodes) + "," + detail::csv_number(secs) + "\n";
        picks.emplace_back(m, k, std::move(s));
      }
    }
    detail::write_text(staging / "seeds.csv", seeds_csv);

    begin("evaluate");
    const Propagation prop(g, cfg.model);
    const std::uint64_t eval_seed = substream(cfg.rng_seed, "eval");
    std::string compare_csv = std::string(kCompareHeader) + "\n";
    for (const auto& [m, k, s] : picks) {
      SpreadEstimate e = estimate_spread(prop, s.nodes, cfg.eval_runs, eval_seed, cfg.threads);
      compare_csv += hash + "," + std::string(to_string(m)) + "," + std::to_string(k) + "," +
                     detail::csv_number(e.mean) + "," + detail::csv_number(e.std_error) + "," +
                     std::to_string(e.runs) + "\n";
    }
    detail::write_text(staging / "compare.csv", compare_csv);

    if (cfg.stability) {
      begin("stability");
      std::string stab_csv = std::string(kStabilityHeader) + "\n";
      StabilityOptions so;
      so.model = cfg.model;
      so.pair_sample = cfg.stability_pairs;
      so.spread_runs = cfg.eval_runs;
      so.rng_seed = substream(cfg.rng_seed, "stability");
      so.threads = cfg.threads;
      for (std::size_t k : cfg.ks) {
        if (k + 1 > g.n()) continue;
        StabilityReport r = stability_report(g, trained.theta, k, cfg.train.embed, so);
        double max_gap = 0.0;
        for (const auto& ins : r.insertions) max_gap = std::max(max_gap, ins.gap_max);
        stab_csv += hash + "," + std::to_string(k) + "," + detail::csv_number(r.delta_rank) + "," +
                    detail::csv_number(r.delta_inf) + "," + detail::csv_number(r.claim_bound) + "," +
                    detail::csv_number(r.proof_bound) + "," + detail::csv_number(r.observed_gap) + "," +
                    detail::csv_number(max_gap) + "," + std::to_string(r.insertions.size()) + "," +
                    detail::csv_number(r.spread_topk.mean) + "," + detail::csv_number(r.spread_iterative.mean) +
                    "\n";
      }
      detail::write_text(staging / "stability.csv", stab_csv);
    }

    begin("manifest");
    std::string manifest = "config_hash " + hash + "\n";
    manifest += "graph_fnv1a " + hex16(fnv1a(detail::read_text(cfg.graph))) + "\n";
    manifest += "seed " + std::to_string(cfg.rng_seed) + "\n";
    for (const char* name : {"sample", "train", "celf", "random", "eval", "stability"}) {
      manifest += std::string("substream ") + name + " " + std::to_string(substream(cfg.rng_seed, name)) + "\n";
    }
    manifest += "[config]\n" + cfg.to_kv().canonical() + "[files]\n";
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(staging)) {
      if (e.is_regular_file()) files.push_back(fs::relative(e.path(), staging));
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      manifest += f.generic_string() + " " + hex16(fnv1a(detail::read_text(staging / f))) + "\n";
    }
    detail::write_text(staging / "manifest.txt", manifest);

    begin("publish");
    for (const auto& e : fs::directory_iterator(staging)) {
      const fs::path dst = out / e.path().filename();
      fs::remove_all(dst);
      fs::rename(e.path(), dst);
    }
    fs::remove_all(staging);
    fs::remove_all(out / "quarantine");
  } catch (const std::exception& ex) {
    std::error_code ec;
    if (fs::exists(staging, ec)) {
      fs::remove_all(out / "quarantine", ec);
      fs::rename(staging, out / "quarantine", ec);
      std::ofstream err(out / "quarantine" / "error.txt");
      err << "stage " << stage << "\n" << ex.what() << "\n";
    }
    throw StageError(stage, ex.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evolutionary snapshots.

struct Snapshot {
  double timestamp = 0.0;
  std::string path;
  bool train = false;
};

/// Text form: one "timestamp path [train]" per line, '#' comments. When no
/// line is marked `train`, every snapshot is a training snapshot. Relative
/// paths resolve against `base_dir`.
struct SnapshotSeries {
  std::vector<Snapshot> snapshots;
  bool monotone = false;  // later snapshots must contain every earlier edge

  static SnapshotSeries parse(std::istream& in, const std::string& base_dir = "") {
    SnapshotSeries s;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string_view line = detail::trim(raw);
      if (line.empty() || line.front() == '#') continue;
      auto tok = detail::split_ws(line);
      if (tok.size() < 2 || tok.size() > 3) throw ParseError(line_no, "expected 'timestamp path [train]'");
      Snapshot snap;
      if (!detail::parse_number(tok[0], snap.timestamp)) throw ParseError(line_no, "bad timestamp");
      std::filesystem::path p(tok[1]);
      if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
      snap.path = p.string();
      if (tok.size() == 3) {
        if (tok[2] != "train") throw ParseError(line_no, "third field must be 'train'");
        snap.train = true;
      }
      s.snapshots.push_back(std::move(snap));
    }
    return s;
  }

  static SnapshotSeries parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open snapshot series '" + path + "'");
    return parse(in, std::filesystem::path(path).parent_path().string());
  }

  void validate() const {
    if (snapshots.size() < 2) throw Error("a snapshot series needs at least 2 snapshots");
    for (std::size_t i = 1; i < snapshots.size(); ++i) {
      if (!(snapshots[i].timestamp > snapshots[i - 1].timestamp)) {
        throw Error("snapshot timestamps must be strictly increasing");
      }
    }
  }

  std::vector<std::size_t> training_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
      if (snapshots[i].train) idx.push_back(i);
    }
    if (idx.empty()) {
      for (std::size_t i = 0; i < snapshots.size(); ++i) idx.push_back(i);
    }
    return idx;
  }
};

/// True when every edge of `earlier` (by external ids) is an edge of `later`.
inline bool contains_graph(const Graph& later, const Graph& earlier) {
  for (const Edge& e : earlier.edges()) {
    auto u = later.find(earlier.external_id(e.src));
    auto v = later.find(earlier.external_id(e.dst));
    if (!u || !v || !later.has_arc(*u, *v)) return false;
  }
  return true;
}

struct EvolutionRow {
  std::string config_hash;
  double train_snapshot = 0.0;
  std::size_t k = 0;
  SpreadEstimate spread;
};

/// Trains one model per training snapshot (on cfg.samples samples of it, or
/// on the snapshot itself when cfg.samples == 0) and evaluates each model's
/// top-k seeds on the final snapshot with cfg.eval_runs runs.
inline std::vector<EvolutionRow> run_evolution(const SnapshotSeries& series, const ExperimentConfig& cfg) {
  series.validate();
  std::vector<Graph> graphs;
  for (const Snapshot& s : series.snapshots) graphs.push_back(load_edge_list_file(s.path, cfg.directed, cfg.weight));
  if (series.monotone) {
    for (std::size_t i = 1; i < graphs.size(); ++i) {
      if (!contains_graph(graphs[i], graphs[i - 1])) {
        throw Error("snapshot " + series.snapshots[i].path + " does not contain its predecessor");
      }
    }
  }
  const Graph& final_graph = graphs.back();
  for (std::size_t k : cfg.ks) {
    if (k > final_graph.n()) throw Error("k=" + std::to_string(k) + " exceeds the final snapshot size");
  }
  const std::string hash = cfg.hash();
  const Propagation prop(final_graph, cfg.model);
  const std::uint64_t eval_seed = substream(cfg.rng_seed, "eval");
  std::vector<EvolutionRow> rows;
  for (std::size_t i : series.training_indices()) {
    std::vector<Graph> train_graphs;
    if (cfg.samples == 0) {
      train_graphs.push_back(graphs[i]);
    } else {
      SampleSpec spec = cfg.sampler;
      spec.rng_seed = substream(cfg.rng_seed, "sample");
      train_graphs = sample_many(graphs[i], spec, cfg.samples);
    }
    const Theta theta = train_with_config(train_graphs, cfg).theta;
    for (std::size_t k : cfg.ks) {
      SeedSet s = select_topk(final_graph, theta, k, cfg.train.embed);
      rows.push_back({hash, series.snapshots[i].timestamp, k,
                      estimate_spread(prop, s.nodes, cfg.eval_runs, eval_seed, cfg.threads)});
    }
  }
  return rows;
}

inline void write_evolution_csv(std::ostream& out, const std::vector<EvolutionRow>& rows) {
  out << kEvolutionHeader << '\n';
  for (const auto& r : rows) {
    out << r.config_hash << ',' << detail::format_double(r.train_snapshot) << ',' << r.k << ','
        << detail::format_double(r.spread.mean) << ',' << detail::format_double(r.spread.std_error) << '\n';
  }
}

/// Text printed by `disco --help-formats`.
inline std::string formats_help() {
  std::string s;
  s += "Edge list (graph input, samples/*.txt):\n";
  s += "  one edge per line: 'u v' or 'u v w'; ids are non-negative integers, w in [0,1];\n";
  s += "  '#' starts a comment; missing weights take --weight. Self-loops and duplicates are errors.\n\n";
  s += "Config (key = value per line, '#' comments). Keys and defaults:\n";
  s += ExperimentConfig{}.to_kv().canonical();
  s += "  plus: out (output directory), threads\n\n";
  s += "Snapshot series: 'timestamp path [train]' per line, timestamps strictly increasing.\n\n";
  s += "Model file:\n";
  s += "  disco-model 1 / q N / iterations I / neighbors out|in|both, then for each tensor\n";
  s += "  (alpha1 alpha2 alpha3 alpha4 beta1 beta2 beta3) a line 'name rows cols' and the rows.\n\n";
  s += "CSV outputs (every row starts with the config hash, 16 hex digits of FNV-1a):\n";
  s += "  samples.csv    " + std::string(kSamplesHeader) + "\n";
  s += "  train_log.csv  " + std::string(kTrainLogHeader) + "\n";
  s += "  seeds.csv      " + std::string(kSeedsHeader) + "   (seeds: ';'-separated external ids)\n";
  s += "  compare.csv    " + std::string(kCompareHeader) + "\n";
  s += "  stability.csv  " + std::string(kStabilityHeader) + "\n";
  s += "  evolve         " + std::string(kEvolutionHeader) + "\n";
  s += "  evaluate       seeds,spread_mean,spread_stderr,runs,wall_time\n";
  s += "  oracle         seeds,spread\n";
  return s;
}

}  // namespace disco
