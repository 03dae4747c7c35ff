#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "guardnet/bench.hpp"
#include "oracles.hpp"

using namespace guardnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("guardnet_bench_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

int cli(const std::string& args) {
  const std::string cmd = std::string(GUARDNET_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig small(const std::string& extra = "") {
  return parse_config(
      "dataset = sbm\n"
      "sbm.nodes = 160\nsbm.clusters = 2\nsbm.p_in = 0.08\nsbm.p_out = 0.005\n"
      "sbm.feature_dim = 8\n"
      "seeds = 0,1\ntargets = 8\n" +
      extra);
}

ReportCell cell(const std::string& defense, std::uint64_t seed, double clean, double attacked,
                double defended, bool ok = true) {
  ReportCell c;
  c.model = "gcn";
  c.defense = defense;
  c.attack = "direct";
  c.seed = seed;
  c.clean = clean;
  c.attacked = attacked;
  c.defended = defended;
  c.ok = ok;
  return c;
}

}  // namespace

TEST(Config, DefaultsMirrorReferenceHyperparameters) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.p0, 0.5);
  EXPECT_EQ(c.layers, 2u);
  EXPECT_EQ(c.hidden, 16u);
  EXPECT_EQ(c.lr, 0.01);
  EXPECT_EQ(c.epochs, 200u);
  EXPECT_EQ(c.patience, 10u);
  EXPECT_EQ(c.dropout, 0.5);
  EXPECT_EQ(c.seeds.size(), 5u);
  EXPECT_FALSE(c.attack.has_value());
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesCommentsAndValues) {
  const RunConfig c = parse_config(
      "# fixture\n"
      "model = gin   # trailing\n"
      "defense = guard-no-memory\n"
      "attack = non-targeted\n"
      "rate = 0.15\n"
      "seeds = 3,4\n"
      "\n"
      "p0 = 0.3\n");
  EXPECT_EQ(c.model, ModelKind::gin);
  EXPECT_EQ(c.defense, Defense::guard_no_memory);
  EXPECT_EQ(c.attack, AttackKind::non_targeted);
  EXPECT_DOUBLE_EQ(c.rate, 0.15);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
  EXPECT_DOUBLE_EQ(c.p0, 0.3);
}

TEST(Config, UnknownKeysAndBadValuesAreErrors) {
  EXPECT_THROW(parse_config("learning_rate = 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config("epochs = many\n"), ConfigError);
  EXPECT_THROW(parse_config("epochs = -3\n"), ConfigError);
  EXPECT_THROW(parse_config("defense = shield\n"), ConfigError);
  EXPECT_THROW(parse_config("attack = nettack\n"), ConfigError);
  EXPECT_THROW(parse_config("just words\n"), ConfigError);
  EXPECT_THROW(parse_seed_list("1,,2"), ConfigError);
  try {
    parse_config("model = gcn\ntypo = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Config, ValidationNamesField) {
  const auto field_of = [](const std::string& text) {
    try {
      parse_config(text).validate();
    } catch (const ConfigError& e) {
      return std::string(e.what()).substr(0, std::string(e.what()).find(':'));
    }
    return std::string();
  };
  EXPECT_EQ(field_of("p0 = 1.5\n"), "p0");
  EXPECT_EQ(field_of("attack = non-targeted\nrate = 0.3\n"), "rate");
  EXPECT_EQ(field_of("dropout = 1\n"), "dropout");
  EXPECT_EQ(field_of("dataset = /nonexistent/dir\n"), "dataset");
  EXPECT_EQ(field_of("threads = 0\n"), "threads");
  EXPECT_EQ(field_of("rate = 0.3\n"), "");  // rate only matters for non-targeted runs
}

TEST(Config, SerializeRoundTripAndHash) {
  const RunConfig c = parse_config("model = gin\nattack = influence\nseeds = 9\np0 = 0.125\n");
  const RunConfig back = parse_config(c.serialize());
  EXPECT_EQ(back.serialize(), c.serialize());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(c.hash().size(), 16u);
  RunConfig d = c;
  d.lr = 0.02;
  EXPECT_NE(d.hash(), c.hash());
}

TEST(Report, MeanStd) {
  const auto [m, s] = mean_std({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_NEAR(s, 1.2909944487358056, 1e-15);
  EXPECT_EQ(mean_std({0.7}).second, 0.0);
}

TEST(Report, SummariesAggregateOkCells) {
  const std::vector<ReportCell> cells{cell("none", 0, 0.9, 0.2, 0.2), cell("guard", 0, 0.9, 0.2, 0.7),
                                      cell("none", 1, 0.8, 0.3, 0.3), cell("guard", 1, 0.8, 0.3, 0.6),
                                      cell("guard", 2, 0, 0, 0, false)};
  const auto s = summarize(cells);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].defense, "none");
  EXPECT_EQ(s[1].runs, 2u);
  EXPECT_NEAR(s[1].defended_mean, 0.65, 1e-12);
  EXPECT_NEAR(s[0].attacked_mean, 0.25, 1e-12);

  ExperimentReport r;
  r.cells = cells;
  r.summaries = s;
  r.config_hash = "abc";
  EXPECT_EQ(&r.find("guard"), &r.summaries[1]);
  EXPECT_THROW(r.find("jaccard"), StateError);
  const fs::path dir = scratch("csv");
  r.write_csv(dir / "report.csv");
  std::istringstream csv(slurp(dir / "report.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.substr(0, 20), "kind,model,defense,a");
  std::size_t rows = 0;
  while (std::getline(csv, line))
    if (line[0] != '#') ++rows;
  EXPECT_EQ(rows, cells.size() + s.size());
  std::ostringstream table;
  r.write_table(table);
  EXPECT_NE(table.str().find("no attack"), std::string::npos);
  EXPECT_NE(table.str().find("0.650 +- "), std::string::npos);
}

TEST(Scaling, LinearFit) {
  double slope = 0, intercept = 0, r2 = 0;
  linear_fit({1, 2, 3, 4}, {3, 5, 7, 9}, slope, intercept, r2);
  EXPECT_NEAR(slope, 2.0, 1e-12);
  EXPECT_NEAR(intercept, 1.0, 1e-12);
  EXPECT_NEAR(r2, 1.0, 1e-12);
}

TEST(Scaling, RowsAndEmptyBaseline) {
  const ScalingReport r = scaling_bench({0, 2000, 4000}, 8, 2);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[1].edges, 2000u);
  EXPECT_EQ(r.rows[1].nodes, 500u);
  EXPECT_LT(r.rows[0].seconds, 1e-3);
  EXPECT_GT(r.slope, 0.0);
}

TEST(Experiment, CleanRunsAndDeterminism) {
  RunConfig c = small();
  const fs::path dir = scratch("clean");
  c.out_dir = dir;
  const ExperimentReport a = run_defenses(c, {Defense::none, Defense::guard});
  EXPECT_FALSE(a.partial);
  ASSERT_EQ(a.cells.size(), 4u);
  EXPECT_EQ(a.find("none").runs, 2u);
  EXPECT_EQ(a.find("guard").runs, 2u);
  for (const auto& cell : a.cells) EXPECT_EQ(cell.attack, "none");
  for (const char* f : {"config.txt", "masks", "checkpoints"})
    EXPECT_TRUE(fs::exists(dir / "seed_0" / f)) << f;

  c.out_dir.reset();
  const ExperimentReport b = run_defenses(c, {Defense::none, Defense::guard});
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].clean, b.cells[i].clean);
    EXPECT_EQ(a.cells[i].defended, b.cells[i].defended);
  }
  const RunConfig replay = load_config(dir / "seed_0" / "config.txt");
  EXPECT_EQ(replay.hash(), small().hash());
}

TEST(Experiment, AblationHasFourDefenses) {
  const ExperimentReport r = run_ablation(small("attack = direct\nseeds = 0\n"));
  ASSERT_EQ(r.summaries.size(), 4u);
  for (const char* d : {"none", "guard-no-prune", "guard-no-memory", "guard"})
    EXPECT_EQ(r.find(d).attack, "direct");
  // Every defense saw the same attack, so the undefended columns agree.
  for (const auto& s : r.summaries) EXPECT_EQ(s.attacked_mean, r.summaries[0].attacked_mean);
}

TEST(Experiment, SweepEchoesRates) {
  const std::vector<double> rates{0.1, 0.05, 0.2};
  const ExperimentReport r =
      run_intensity_sweep(small("attack = non-targeted\nseeds = 0\n"), rates);
  std::vector<double> seen;
  for (const auto& s : r.summaries)
    if (s.defense == "guard") seen.push_back(s.rate);
  EXPECT_EQ(seen, rates);
}

TEST(Experiment, SeedFailureMarksPartial) {
  // Jaccard needs binary features; the SBM features are continuous.
  const ExperimentReport r = run_defenses(small("seeds = 0\n"), {Defense::none, Defense::jaccard});
  EXPECT_TRUE(r.partial);
  ASSERT_FALSE(r.cells.empty());
  for (const auto& c : r.cells) {
    EXPECT_FALSE(c.ok);
    EXPECT_NE(c.error.find("cosine"), std::string::npos) << c.error;
  }
  EXPECT_TRUE(r.summaries.empty());
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  std::ofstream(dir / "bad.conf") << "bogus_key = 1\n";
  EXPECT_EQ(cli("run --config " + (dir / "bad.conf").string()), 2);
  EXPECT_EQ(cli("run --no-such-flag"), 2);
  EXPECT_EQ(cli("run --config " + (dir / "missing.conf").string()), 2);

  std::ofstream(dir / "tiny.conf") << small().serialize();
  EXPECT_EQ(cli("run --config " + (dir / "tiny.conf").string() + " --seeds 0 --out " +
                (dir / "run").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "run" / "report.csv"));
  EXPECT_TRUE(fs::exists(dir / "run" / "config.txt"));

  std::ofstream(dir / "jaccard.conf") << small("defense = jaccard\nseeds = 0\n").serialize();
  EXPECT_EQ(cli("run --config " + (dir / "jaccard.conf").string() + " --out " +
                (dir / "partial").string()),
            3);
  EXPECT_TRUE(fs::exists(dir / "partial" / "report.csv"));
}

TEST(Cli, GenAndOrbits) {
  const fs::path dir = scratch("gen");
  ASSERT_EQ(cli("gen --kind cycle-house --out " + (dir / "house").string()), 0);
  ASSERT_TRUE(fs::exists(dir / "house" / "edges.txt"));
  ASSERT_EQ(cli("orbits --edges " + (dir / "house" / "edges.txt").string() + " --out " +
                (dir / "gdv.csv").string()),
            0);
  const GdvTable t = read_gdv_csv(dir / "gdv.csv");
  EXPECT_EQ(t.n, 999u);
  EXPECT_EQ(cli("gen --kind lattice --out " + (dir / "x").string()), 2);
}
