#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "guardnet/bench.hpp"
#include "guardnet/graphlet.hpp"
#include "guardnet/synth.hpp"

namespace fs = std::filesystem;
using namespace guardnet;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Common {
  std::string config;
  std::string out;
  std::string seeds;
  std::size_t threads = 0;
};

RunConfig resolve(const Common& c) {
  RunConfig config = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (!c.out.empty()) config.out_dir = c.out;
  if (!c.seeds.empty()) config.seeds = parse_seed_list(c.seeds);
  if (c.threads) config.threads = c.threads;
  config.validate();
  return config;
}

int emit(const ExperimentReport& report, const RunConfig& config) {
  report.write_table(std::cout);
  if (config.out_dir) {
    report.write_csv(*config.out_dir / "report.csv");
    std::ofstream txt(*config.out_dir / "report.txt");
    report.write_table(txt);
  }
  if (report.partial) {
    for (const auto& c : report.cells)
      if (!c.ok) std::cerr << "seed " << c.seed << " (" << c.defense << "): " << c.error << "\n";
    return kRuntimeError;
  }
  return kOk;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("expected a number, got '" + item + "'");
    }
  }
  return out;
}

void write_graph(const SparseGraph& g, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream edges(dir / "edges.txt");
  for (const auto& [u, v] : g.edge_list()) edges << u << ' ' << v << '\n';
  std::ofstream labels(dir / "labels.txt");
  for (std::size_t u = 0; u < g.n_nodes(); ++u) labels << g.label(u) << '\n';
  if (g.has_features()) {
    std::ofstream features(dir / "features.csv");
    features.precision(17);
    const Tensor& x = g.features();
    for (std::size_t u = 0; u < x.rows(); ++u) {
      for (std::size_t j = 0; j < x.cols(); ++j) features << (j ? "," : "") << x.at(u, j);
      features << '\n';
    }
  }
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "flat key = value config file");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--seeds", c.seeds, "comma separated seeds, e.g. 0,1,2");
  app->add_option("--threads", c.threads, "worker threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph defense experiments: train, attack, defend and report"};
  app.require_subcommand(1);

  Common common;
  auto* run = app.add_subcommand("run", "run one experiment from a config");
  add_common(run, common);
  auto* ablate = app.add_subcommand("ablate", "direct attack against four defense variants");
  add_common(ablate, common);
  auto* sweep = app.add_subcommand("sweep", "non-targeted attack over several rates");
  add_common(sweep, common);
  std::string rates = "0.05,0.10,0.15,0.20,0.25";
  sweep->add_option("--rates", rates, "comma separated perturbation rates");

  auto* bench = app.add_subcommand("bench", "time guard estimation against edge count");
  add_common(bench, common);
  std::string sizes = "1000,2000,4000,8000";
  std::size_t dim = 16, trials = 5;
  bench->add_option("--sizes", sizes, "comma separated edge counts");
  bench->add_option("--dim", dim, "embedding width");
  bench->add_option("--trials", trials, "timing repetitions (minimum is kept)");

  auto* gen = app.add_subcommand("gen", "write a synthetic dataset");
  add_common(gen, common);
  std::string kind = "sbm";
  gen->add_option("--kind", kind, "sbm or cycle-house")->check(CLI::IsMember({"sbm", "cycle-house"}));

  auto* orbits = app.add_subcommand("orbits", "export graphlet degree vectors as CSV");
  std::string edges_path, orbit_out;
  orbits->add_option("--edges", edges_path, "edge list file")->required();
  orbits->add_option("--out", orbit_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run || *ablate || *sweep) {
      const RunConfig config = resolve(common);
      if (config.out_dir) {
        fs::create_directories(*config.out_dir);
        std::ofstream(*config.out_dir / "config.txt") << config.serialize();
      }
      if (*run) return emit(run_experiment(config), config);
      if (*ablate) return emit(run_ablation(config), config);
      return emit(run_intensity_sweep(config, parse_doubles(rates)), config);
    }
    if (*bench) {
      std::vector<std::size_t> list;
      for (double s : parse_doubles(sizes)) {
        if (s < 0) throw ConfigError("sizes must be nonnegative");
        list.push_back(static_cast<std::size_t>(s));
      }
      const ScalingReport r = scaling_bench(list, dim, trials);
      std::cout << "edges  nodes  dim  seconds\n";
      for (const auto& row : r.rows)
        std::cout << row.edges << "  " << row.nodes << "  " << row.dim << "  " << row.seconds << "\n";
      std::cout << "slope " << r.slope << " s/edge, intercept " << r.intercept << " s, R^2 " << r.r2
                << "\n";
      if (!common.out.empty()) {
        fs::create_directories(common.out);
        std::ofstream csv(fs::path(common.out) / "bench.csv");
        csv.precision(17);
        csv << "edges,nodes,dim,seconds\n";
        for (const auto& row : r.rows)
          csv << row.edges << ',' << row.nodes << ',' << row.dim << ',' << row.seconds << '\n';
        csv << "# slope " << r.slope << " intercept " << r.intercept << " r2 " << r.r2 << '\n';
      }
      return kOk;
    }
    if (*gen) {
      const RunConfig config = resolve(common);
      if (common.out.empty()) throw ConfigError("gen needs --out");
      const SparseGraph g =
          kind == "sbm" ? gen_sbm(config.sbm) : gen_cycle_house(config.cycle_house);
      write_graph(g, common.out);
      std::cout << "wrote " << g.n_nodes() << " nodes, " << g.n_edges() << " edges to "
                << common.out << "\n";
      return kOk;
    }
    if (*orbits) {
      const SparseGraph g = load_edge_list(edges_path, std::nullopt, std::nullopt);
      write_gdv_csv(count_orbits(g), orbit_out);
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
