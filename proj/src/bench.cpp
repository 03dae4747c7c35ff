#include "guardnet/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "guardnet/graphlet.hpp"

namespace guardnet {

namespace fs = std::filesystem;

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Exceptions are
/// stored per index as messages.
std::vector<std::string> parallel_for(std::size_t count, std::size_t threads,
                                      const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  const std::size_t n = std::min(std::max<std::size_t>(threads, 1), std::max<std::size_t>(count, 1));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return errors;
}

struct Dataset {
  SparseGraph graph;  // features attached, no masks
  bool graphlet = false;
  std::optional<Tensor> structural;
};

Dataset prepare(const RunConfig& config) {
  Dataset d;
  if (config.dataset == "sbm") {
    d.graph = gen_sbm(config.sbm);
  } else if (config.dataset == "cycle-house") {
    d.graph = gen_cycle_house(config.cycle_house);
  } else {
    const fs::path dir(config.dataset);
    const auto optional_file = [&](const char* name) -> std::optional<fs::path> {
      return fs::exists(dir / name) ? std::optional<fs::path>(dir / name) : std::nullopt;
    };
    d.graph = load_edge_list(dir / "edges.txt", optional_file("features.csv"),
                             optional_file("labels.txt"));
  }
  if (!d.graph.has_labels()) throw ValidationError("dataset has no labels");
  const bool featureless = !d.graph.has_features();
  d.graphlet = config.similarity == "graphlet" || (config.similarity == "auto" && featureless);
  if (featureless || d.graphlet) {
    const Tensor gdv = log_scaled_gdv(count_orbits(d.graph));
    if (featureless) d.graph = d.graph.with_features(gdv);
    if (d.graphlet) d.structural = center_columns(gdv);
  }
  return d;
}

Model train_variant(const RunConfig& config, const Dataset& data, const SparseGraph& graph,
                    Defense defense, std::uint64_t seed) {
  ModelConfig mc;
  mc.kind = config.model;
  mc.in_dim = graph.feature_dim();
  mc.hidden_dim = config.hidden;
  mc.num_classes = graph.num_classes();
  mc.layers = config.layers;
  mc.dropout = config.dropout;
  mc.seed = seed;
  Model model(mc);

  const SparseGraph* input = &graph;
  SparseGraph filtered;
  if (defense == Defense::jaccard) {
    filtered = jaccard_preprocess(graph, config.jaccard_threshold);
    input = &filtered;
  } else if (defense != Defense::none) {
    GuardConfig gc;
    gc.p0 = config.p0;
    gc.penalty = config.penalty;
    gc.pruning = defense != Defense::guard_no_prune;
    gc.memory = defense != Defense::guard_no_memory;
    gc.mode = data.graphlet ? SimilarityMode::graphlet : SimilarityMode::feature_cosine;
    Guard guard(gc);
    if (data.graphlet) guard.set_structural_vectors(*data.structural);
    model.attach_guard(std::move(guard));
  }

  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.patience = config.patience;
  tc.lr = config.lr;
  tc.weight_decay = config.weight_decay;
  tc.seed = mix(seed, 17);
  train(model, *input, tc);
  return model;
}

/// Accuracy of a trained variant: over targets, or over the test mask.
double score_variant(const Model& model, const SparseGraph& graph, Defense defense,
                     const RunConfig& config, std::span<const std::size_t> targets) {
  const SparseGraph filtered =
      defense == Defense::jaccard ? jaccard_preprocess(graph, config.jaccard_threshold) : graph;
  if (targets.empty()) return evaluate(model, filtered, filtered.masks().test);
  const Tensor logits = predict(model, filtered);
  std::size_t correct = 0;
  for (std::size_t t : targets) correct += argmax_row(logits, t) == filtered.label(t);
  return static_cast<double>(correct) / static_cast<double>(targets.size());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
}

struct SeedState {
  SparseGraph graph;  // split
  double clean = 0.0;
  std::vector<std::size_t> targets;
  std::optional<Surrogate> surrogate;
  std::string error;
};

std::string rate_label(double rate) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << rate;
  return os.str();
}

struct Job {
  std::size_t seed_index = 0;
  double rate = 0.0;
  std::vector<std::size_t> targets;  // empty: test-set accuracy
};

}  // namespace

// ---------------------------------------------------------------------------

SparseGraph load_dataset(const RunConfig& config) { return prepare(config).graph; }

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<Summary> summarize(const std::vector<ReportCell>& cells) {
  std::vector<Summary> out;
  std::vector<std::vector<const ReportCell*>> groups;
  for (const auto& c : cells) {
    if (!c.ok) continue;
    std::size_t g = 0;
    for (; g < out.size(); ++g)
      if (out[g].model == c.model && out[g].defense == c.defense && out[g].attack == c.attack &&
          out[g].rate == c.rate)
        break;
    if (g == out.size()) {
      out.push_back(Summary{c.model, c.defense, c.attack, c.rate});
      groups.emplace_back();
    }
    groups[g].push_back(&c);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    std::vector<double> clean, attacked, defended;
    for (const auto* c : groups[g]) {
      clean.push_back(c->clean);
      attacked.push_back(c->attacked);
      defended.push_back(c->defended);
    }
    out[g].runs = groups[g].size();
    std::tie(out[g].clean_mean, out[g].clean_std) = mean_std(clean);
    std::tie(out[g].attacked_mean, out[g].attacked_std) = mean_std(attacked);
    std::tie(out[g].defended_mean, out[g].defended_std) = mean_std(defended);
  }
  return out;
}

const Summary& ExperimentReport::find(const std::string& defense, const std::string& attack,
                                      std::optional<double> rate) const {
  for (const auto& s : summaries) {
    if (s.defense != defense) continue;
    if (!attack.empty() && s.attack != attack) continue;
    if (rate && std::abs(s.rate - *rate) > 1e-12) continue;
    return s;
  }
  throw StateError("report has no row for defense '" + defense + "'" +
                   (attack.empty() ? "" : ", attack '" + attack + "'"));
}

void ExperimentReport::write_csv(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.precision(17);
  out << "kind,model,defense,attack,rate,seed,runs,clean,clean_std,attacked,attacked_std,"
         "defended,defended_std,ok,error\n";
  for (const auto& c : cells) {
    std::string err = c.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << "cell," << c.model << ',' << c.defense << ',' << c.attack << ',' << c.rate << ','
        << c.seed << ",1," << c.clean << ",0," << c.attacked << ",0," << c.defended << ",0,"
        << (c.ok ? 1 : 0) << ',' << err << '\n';
  }
  for (const auto& s : summaries) {
    out << "mean," << s.model << ',' << s.defense << ',' << s.attack << ',' << s.rate << ",,"
        << s.runs << ',' << s.clean_mean << ',' << s.clean_std << ',' << s.attacked_mean << ','
        << s.attacked_std << ',' << s.defended_mean << ',' << s.defended_std << ",1,\n";
  }
  out << "# config " << config_hash << " wall_seconds " << wall_seconds
      << (partial ? " partial" : "") << '\n';
}

void ExperimentReport::write_table(std::ostream& out) const {
  const std::vector<std::string> head{"model", "defense", "attack", "rate", "runs",
                                      "no attack", "attack", "defended"};
  std::vector<std::vector<std::string>> rows{head};
  const auto cell = [](double m, double s) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << m << " +- " << s;
    return os.str();
  };
  for (const auto& s : summaries) {
    rows.push_back({s.model, s.defense, s.attack, rate_label(s.rate), std::to_string(s.runs),
                    cell(s.clean_mean, s.clean_std), cell(s.attacked_mean, s.attacked_std),
                    cell(s.defended_mean, s.defended_std)});
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t i = 0; i < rows[k].size(); ++i) {
      out << (i ? "  " : "") << std::left << std::setw(static_cast<int>(width[i])) << rows[k][i];
    }
    out << '\n';
    if (k == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
  out << "config " << config_hash << ", " << std::fixed << std::setprecision(1) << wall_seconds
      << " s" << (partial ? ", PARTIAL" : "") << '\n';
}

namespace {

/// Shared engine: seeds x rates, every defense evaluated on the same attack.
ExperimentReport run_grid(const RunConfig& config, const std::vector<Defense>& defenses,
                          const std::vector<double>& rates) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const Dataset data = prepare(config);
  const std::size_t n_seeds = config.seeds.size();
  const bool targeted = config.attack == AttackKind::direct || config.attack == AttackKind::influence;

  // Phase 1: per seed, split, clean model, targets and surrogate.
  std::vector<SeedState> seeds(n_seeds);
  auto errors = parallel_for(n_seeds, config.threads, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    SeedState& st = seeds[i];
    SplitSpec spec;
    spec.seed = seed;
    st.graph = split(data.graph, spec);
    const Model clean = train_variant(config, data, st.graph, Defense::none, mix(seed, 1));
    st.clean = score_variant(clean, st.graph, Defense::none, config, {});
    if (targeted) {
      st.targets = select_targets(st.graph, clean, config.targets, seed, config.min_target_degree);
    }
    if (config.attack) {
      if (config.model == ModelKind::gcn && config.layers == 2) {
        st.surrogate.emplace(clean);
      } else {
        TrainConfig tc;
        tc.epochs = config.epochs;
        tc.patience = config.patience;
        st.surrogate.emplace(Surrogate::fit(st.graph, mix(seed, 2), tc));
      }
    }
    if (config.out_dir) {
      const fs::path dir = *config.out_dir / ("seed_" + std::to_string(seed));
      write_text(dir / "config.txt", config.serialize());
      export_masks(st.graph.masks(), dir / "masks");
      save_checkpoint(clean, dir / "checkpoints" / "clean");
    }
  });
  for (std::size_t i = 0; i < n_seeds; ++i) seeds[i].error = errors[i];

  // Phase 2: independent units.
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    if (!seeds[i].error.empty()) continue;
    if (targeted) {
      for (std::size_t t : seeds[i].targets) jobs.push_back({i, config.rate, {t}});
    } else {
      for (double r : rates) jobs.push_back({i, r, {}});
    }
  }
  // per job: attacked accuracy (0/1 for a target) and one value per defense
  std::vector<double> job_attacked(jobs.size(), 0.0);
  std::vector<std::vector<double>> job_defended(jobs.size(), std::vector<double>(defenses.size()));
  errors = parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    const SeedState& st = seeds[job.seed_index];
    const std::uint64_t seed = config.seeds[job.seed_index];
    const std::uint64_t unit_seed = mix(seed, job.targets.empty() ? 1000 + static_cast<std::uint64_t>(
                                                                                std::llround(job.rate * 1e4))
                                                                  : 1'000'000 + job.targets[0]);
    SparseGraph poisoned = st.graph;
    if (config.attack) {
      AttackConfig ac;
      ac.kind = *config.attack;
      ac.rate = job.rate;
      ac.pool_size = config.pool_size;
      ac.seed = unit_seed;
      Perturbation pert;
      std::string name;
      if (*config.attack == AttackKind::direct) {
        pert = attack_direct(st.graph, job.targets[0], *st.surrogate, ac);
        name = "direct_" + std::to_string(job.targets[0]);
      } else if (*config.attack == AttackKind::influence) {
        pert = attack_influence(st.graph, job.targets[0], *st.surrogate, ac);
        name = "influence_" + std::to_string(job.targets[0]);
      } else {
        pert = attack_nontargeted(st.graph, *st.surrogate, ac);
        name = "nontargeted_" + rate_label(job.rate);
      }
      check_perturbation(pert);
      poisoned = apply_perturbation(st.graph, pert);
      if (config.out_dir) {
        write_perturbation(pert, *config.out_dir / ("seed_" + std::to_string(seed)) /
                                     "perturbations" / (name + ".txt"));
      }
      const Model undefended = train_variant(config, data, poisoned, Defense::none, unit_seed);
      job_attacked[j] = score_variant(undefended, poisoned, Defense::none, config, job.targets);
    } else {
      job_attacked[j] = st.clean;
    }
    for (std::size_t d = 0; d < defenses.size(); ++d) {
      if (defenses[d] == Defense::none) {
        job_defended[j][d] = config.attack ? job_attacked[j] : st.clean;
        continue;
      }
      const Model m = train_variant(config, data, poisoned, defenses[d], unit_seed);
      job_defended[j][d] = score_variant(m, poisoned, defenses[d], config, job.targets);
    }
  });

  // Assemble cells in (rate, defense, seed) order.
  ExperimentReport report;
  report.config_hash = config.hash();
  const std::string attack = config.attack ? to_string(*config.attack) : "none";
  const std::vector<double> cell_rates =
      targeted || !config.attack ? std::vector<double>{config.attack ? config.rate : 0.0} : rates;
  for (double r : cell_rates) {
    for (std::size_t d = 0; d < defenses.size(); ++d) {
      for (std::size_t i = 0; i < n_seeds; ++i) {
        ReportCell c;
        c.model = to_string(config.model);
        c.defense = to_string(defenses[d]);
        c.attack = attack;
        c.rate = targeted ? 0.0 : r;
        c.seed = config.seeds[i];
        c.clean = seeds[i].clean;
        c.error = seeds[i].error;
        std::vector<double> att, def;
        for (std::size_t j = 0; j < jobs.size(); ++j) {
          if (jobs[j].seed_index != i) continue;
          if (!targeted && config.attack && jobs[j].rate != r) continue;
          if (!errors[j].empty()) {
            c.error = errors[j];
            continue;
          }
          att.push_back(job_attacked[j]);
          def.push_back(job_defended[j][d]);
        }
        c.ok = c.error.empty() && !att.empty();
        if (c.ok) {
          c.attacked = mean_std(att).first;
          c.defended = mean_std(def).first;
        } else if (c.error.empty()) {
          c.error = "no units completed";
        }
        report.partial |= !c.ok;
        report.cells.push_back(std::move(c));
      }
    }
  }
  report.summaries = summarize(report.cells);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

ExperimentReport run_defenses(const RunConfig& config, const std::vector<Defense>& defenses) {
  return run_grid(config, defenses, {config.rate});
}

ExperimentReport run_experiment(const RunConfig& config) {
  return run_defenses(config, {config.defense});
}

ExperimentReport run_ablation(const RunConfig& config) {
  if (config.attack != AttackKind::direct) {
    throw ConfigError("attack: ablation requires the direct attack");
  }
  return run_defenses(config, {Defense::none, Defense::guard_no_prune, Defense::guard_no_memory,
                               Defense::guard});
}

ExperimentReport run_intensity_sweep(const RunConfig& config, const std::vector<double>& rates) {
  if (config.attack != AttackKind::non_targeted) {
    throw ConfigError("attack: the intensity sweep requires the non-targeted attack");
  }
  if (rates.empty()) throw ConfigError("rates: at least one rate required");
  for (double r : rates)
    if (!(r > 0.0 && r <= 0.25)) throw ConfigError("rates: each rate must lie in (0, 0.25]");
  RunConfig c = config;
  c.rate = rates.front();
  return run_grid(c, {Defense::none, Defense::guard}, rates);
}

// ---------------------------------------------------------------------------

void linear_fit(const std::vector<double>& x, const std::vector<double>& y, double& slope,
                double& intercept, double& r2) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("linear fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw PreconditionError("linear fit needs distinct x values");
  slope = sxy / sxx;
  intercept = my - slope * mx;
  r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
}

ScalingReport scaling_bench(const std::vector<std::size_t>& sizes, std::size_t dim,
                            std::size_t trials, std::uint64_t seed) {
  if (dim == 0 || trials == 0) throw ValidationError("scaling bench needs dim and trials > 0");
  ScalingReport report;
  std::mt19937_64 rng(seed);
  for (std::size_t edges : sizes) {
    std::size_t n = std::max<std::size_t>(edges / 4, 2);
    while (n * (n - 1) / 2 < edges) ++n;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::set<Edge> set;
    while (set.size() < edges) {
      const std::size_t a = pick(rng), b = pick(rng);
      if (a != b) set.insert(normalized(a, b));
    }
    const std::vector<Edge> list(set.begin(), set.end());
    std::normal_distribution<double> normal;
    std::vector<double> x(n * dim);
    for (double& v : x) v = normal(rng);
    const SparseGraph g = SparseGraph::from_edges(n, list, Tensor({n, dim}, x));
    const Guard guard;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
      Tape tape;
      tape.set_recording(false);
      GuardPass pass;
      const auto t0 = std::chrono::steady_clock::now();
      guard.layer_weights(tape, g, 0, g.features(), pass);
      guard.layer_weights(tape, g, 1, g.features(), pass);
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      best = std::min(best, s);
    }
    report.rows.push_back({edges, n, dim, best});
  }
  if (report.rows.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& r : report.rows) {
      xs.push_back(static_cast<double>(r.edges));
      ys.push_back(r.seconds);
    }
    linear_fit(xs, ys, report.slope, report.intercept, report.r2);
  }
  return report;
}

}  // namespace guardnet
