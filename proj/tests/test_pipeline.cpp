#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "disco/generators.hpp"
#include "disco/pipeline.hpp"

using namespace disco;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("disco-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_graph(const fs::path& path, const Graph& g) {
  std::ofstream f(path);
  write_edge_list(f, g);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

ExperimentConfig small_config(const fs::path& dir) {
  write_graph(dir / "graph.txt", preferential_attachment(120, 2, 0.1, 3));
  ExperimentConfig c;
  c.graph = (dir / "graph.txt").string();
  c.samples = 2;
  c.sampler.fraction = 0.2;
  c.train.episodes = 0;
  c.ks = {10, 20, 30, 40, 50};
  c.eval_runs = 300;
  c.celf_runs = 30;
  c.stability_pairs = 500;
  c.out = (dir / "out").string();
  return c;
}

}  // namespace

TEST(KeyValues, ParseAndErrors) {
  std::stringstream in("# comment\n a = 1 \n\nb=two words\n");
  KeyValues kv = KeyValues::parse(in);
  EXPECT_EQ(kv.get("a", ""), "1");
  EXPECT_EQ(kv.get("b", ""), "two words");
  EXPECT_EQ(kv.number<int>("a", 0), 1);
  EXPECT_EQ(kv.get("c", "x"), "x");
  EXPECT_THROW(kv.number<int>("b", 0), Error);
  std::stringstream dup("a=1\na=2\n");
  EXPECT_THROW(KeyValues::parse(dup), ParseError);
  std::stringstream noeq("a 1\n");
  EXPECT_THROW(KeyValues::parse(noeq), ParseError);
  std::stringstream flags("x=yes\ny=off\nz=maybe\n");
  KeyValues f = KeyValues::parse(flags);
  EXPECT_TRUE(f.flag("x", false));
  EXPECT_FALSE(f.flag("y", true));
  EXPECT_THROW(f.flag("z", true), Error);
}

TEST(ExperimentConfig, HashIgnoresOutAndThreads) {
  ExperimentConfig a;
  a.graph = "g.txt";
  ExperimentConfig b = a;
  b.out = "elsewhere";
  b.threads = 4;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.train.lr = 0.002;
  EXPECT_NE(a.hash(), b.hash());
  // round trip through text keeps the hash
  std::stringstream ss(a.to_kv().canonical());
  EXPECT_EQ(ExperimentConfig::from_kv(KeyValues::parse(ss)).hash(), a.hash());
  std::stringstream unknown("graph=g\nbogus=1\n");
  EXPECT_THROW(ExperimentConfig::from_kv(KeyValues::parse(unknown)), Error);
}

TEST(Pipeline, WritesAllArtifactsAndIsReproducible) {
  fs::path dir = scratch("pipeline");
  ExperimentConfig c = small_config(dir);
  run_pipeline(c);
  const fs::path out = c.out;
  for (const char* f : {"samples.csv", "train_log.csv", "model.txt", "seeds.csv", "compare.csv", "stability.csv",
                        "manifest.txt", "samples/sample_000.txt", "samples/sample_001.txt"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_FALSE(fs::exists(out / ".staging"));
  EXPECT_FALSE(fs::exists(out / "quarantine"));

  auto compare = lines(slurp(out / "compare.csv"));
  ASSERT_EQ(compare.size(), 1 + 5 * c.methods.size());
  EXPECT_EQ(compare[0], kCompareHeader);
  const std::string hash = c.hash();
  for (const char* f : {"samples.csv", "train_log.csv", "seeds.csv", "compare.csv", "stability.csv"}) {
    auto rows = lines(slurp(out / f));
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i].substr(0, 17), hash + ",") << f;
  }
  EXPECT_NE(slurp(out / "samples/sample_000.txt").find("# d_statistic degree"), std::string::npos);

  std::map<std::string, std::string> first;
  for (const char* f : {"samples.csv", "train_log.csv", "seeds.csv", "compare.csv", "stability.csv", "model.txt",
                        "manifest.txt"}) {
    first[f] = slurp(out / f);
  }
  c.threads = 2;
  run_pipeline(c);
  for (const auto& [f, text] : first) EXPECT_EQ(slurp(out / f), text) << f;
}

TEST(Pipeline, FailureQuarantinesAndKeepsPublishedFiles) {
  fs::path dir = scratch("pipeline-fail");
  ExperimentConfig c = small_config(dir);
  c.ks = {10};
  run_pipeline(c);
  const std::string before = slurp(fs::path(c.out) / "compare.csv");
  c.ks = {500};  // larger than the graph
  try {
    run_pipeline(c);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
  }
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "quarantine" / "error.txt"));
  EXPECT_EQ(slurp(fs::path(c.out) / "compare.csv"), before);

  c = small_config(dir);
  c.graph = (dir / "missing.txt").string();
  EXPECT_THROW(run_pipeline(c), StageError);
}

TEST(Pipeline, ConfigFileResolvesRelativeGraph) {
  fs::path dir = scratch("pipeline-cfg");
  write_graph(dir / "g.txt", preferential_attachment(30, 1, 0.2, 1));
  std::ofstream(dir / "exp.cfg") << "graph = g.txt\nk = 3,5\nmethods = disco,random\n";
  ExperimentConfig c = ExperimentConfig::from_file((dir / "exp.cfg").string());
  EXPECT_EQ(fs::path(c.graph), dir / "g.txt");
  EXPECT_EQ(c.ks, (std::vector<std::size_t>{3, 5}));
  ASSERT_EQ(c.methods.size(), 2u);
  EXPECT_EQ(c.methods[0], SelectionMethod::TopK);
}

TEST(Snapshots, ParseAndValidate) {
  std::stringstream in("# series\n1 a.txt\n2 b.txt train\n");
  auto s = SnapshotSeries::parse(in, "/data");
  ASSERT_EQ(s.snapshots.size(), 2u);
  EXPECT_EQ(fs::path(s.snapshots[0].path), fs::path("/data/a.txt"));
  EXPECT_EQ(s.training_indices(), (std::vector<std::size_t>{1}));
  EXPECT_NO_THROW(s.validate());
  std::stringstream bad("2 a.txt\n1 b.txt\n");
  EXPECT_THROW(SnapshotSeries::parse(bad).validate(), Error);
  std::stringstream one("1 a.txt\n");
  EXPECT_THROW(SnapshotSeries::parse(one).validate(), Error);
  std::stringstream junk("1 a.txt maybe\n");
  EXPECT_THROW(SnapshotSeries::parse(junk), ParseError);
}

TEST(Snapshots, MonotoneContainment) {
  Graph big = preferential_attachment(100, 2, 0.1, 2);
  Graph small = prefix_subgraph(big, 50);
  EXPECT_TRUE(contains_graph(big, small));
  EXPECT_FALSE(contains_graph(small, big));

  fs::path dir = scratch("monotone");
  write_graph(dir / "a.txt", big);
  write_graph(dir / "b.txt", small);
  SnapshotSeries s;
  s.snapshots = {{1, (dir / "a.txt").string(), false}, {2, (dir / "b.txt").string(), false}};
  s.monotone = true;
  ExperimentConfig c;
  c.samples = 0;
  c.train.episodes = 0;
  c.eval_runs = 10;
  EXPECT_THROW(run_evolution(s, c), Error);
}

TEST(Evolution, EarlyModelStaysCompetitive) {
  Graph full = preferential_attachment(600, 2, 0.1, 5);
  fs::path dir = scratch("evolution");
  SnapshotSeries s;
  for (std::size_t n : {200, 400, 600}) {
    const fs::path p = dir / ("snap_" + std::to_string(n) + ".txt");
    write_graph(p, prefix_subgraph(full, n));
    s.snapshots.push_back({static_cast<double>(n), p.string(), false});
  }
  s.monotone = true;
  ExperimentConfig c;
  c.samples = 0;
  c.train.episodes = 20;
  c.train.budget = 5;
  c.train.q = 8;
  c.train.reward_runs = 20;
  c.train.lr = 0.01;
  c.train.max_grad_norm = 10.0;
  c.eval_runs = 2000;
  auto rows = run_evolution(s, c);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_GE(rows.front().spread.mean, 0.95 * rows.back().spread.mean);

  std::stringstream csv;
  write_evolution_csv(csv, rows);
  EXPECT_EQ(lines(csv.str()).size(), 4u);
}

TEST(Evolution, IdenticalSnapshotsGiveIdenticalRows) {
  Graph g = preferential_attachment(150, 2, 0.1, 8);
  fs::path dir = scratch("evolution-same");
  write_graph(dir / "a.txt", g);
  write_graph(dir / "b.txt", g);
  SnapshotSeries s;
  s.snapshots = {{1, (dir / "a.txt").string(), false}, {2, (dir / "b.txt").string(), false}};
  ExperimentConfig c;
  c.samples = 2;
  c.sampler.fraction = 0.2;
  c.train.episodes = 3;
  c.train.budget = 4;
  c.train.q = 6;
  c.train.reward_runs = 10;
  c.eval_runs = 500;
  auto rows = run_evolution(s, c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].spread.mean, rows[1].spread.mean);
  EXPECT_EQ(rows[0].spread.std_error, rows[1].spread.std_error);
}
