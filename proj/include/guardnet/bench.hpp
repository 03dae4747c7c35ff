#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "guardnet/adversary.hpp"
#include "guardnet/guard.hpp"
#include "guardnet/model.hpp"
#include "guardnet/synth.hpp"

namespace guardnet {

enum class Defense { none, guard, guard_no_prune, guard_no_memory, jaccard };

std::string to_string(Defense defense);
Defense parse_defense(const std::string& name);

struct RunConfig {
  // Dataset: "sbm", "cycle-house", or a directory holding edges.txt and
  // optional features.csv / labels.txt.
  std::string dataset = "sbm";
  SbmSpec sbm;
  CycleHouseSpec cycle_house;
  std::string similarity = "auto";  // auto | cosine | graphlet

  ModelKind model = ModelKind::gcn;
  Defense defense = Defense::guard;
  std::optional<AttackKind> attack;  // empty: no attack
  double rate = 0.2;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  double p0 = 0.5;
  std::size_t layers = 2;
  std::size_t hidden = 16;
  double lr = 0.01;
  std::size_t epochs = 200;
  std::size_t patience = 10;
  double dropout = 0.5;
  double weight_decay = 5e-4;
  double penalty = 1e-3;
  double jaccard_threshold = 0.01;

  std::size_t targets = 40;
  std::size_t min_target_degree = 1;
  std::size_t pool_size = 500;
  std::size_t threads = 1;
  std::optional<std::filesystem::path> out_dir;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  /// Canonical "key = value" text; parse_config(serialize()) round-trips.
  std::string serialize() const;
  /// FNV-1a hash of serialize(), hex.
  std::string hash() const;
};

/// Flat "key = value" text with '#' comments. Unknown keys are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// One (model, defense, attack, rate, seed) result. Targeted attacks report
/// accuracy over the target set; other settings report test accuracy.
struct ReportCell {
  std::string model;
  std::string defense;
  std::string attack;
  double rate = 0.0;
  std::uint64_t seed = 0;
  double clean = 0.0;     // undefended, clean graph
  double attacked = 0.0;  // undefended, poisoned graph
  double defended = 0.0;  // with the defense, poisoned graph (clean graph if no attack)
  bool ok = true;
  std::string error;
};

struct Summary {
  std::string model;
  std::string defense;
  std::string attack;
  double rate = 0.0;
  std::size_t runs = 0;
  double clean_mean = 0.0, clean_std = 0.0;
  double attacked_mean = 0.0, attacked_std = 0.0;
  double defended_mean = 0.0, defended_std = 0.0;
};

struct ExperimentReport {
  std::vector<ReportCell> cells;
  std::vector<Summary> summaries;
  std::string config_hash;
  double wall_seconds = 0.0;
  bool partial = false;

  /// Summary for a (defense, attack, rate) triple; throws if absent.
  const Summary& find(const std::string& defense, const std::string& attack = "",
                      std::optional<double> rate = std::nullopt) const;
  void write_csv(const std::filesystem::path& path) const;
  void write_table(std::ostream& out) const;
};

/// Sample mean and (n-1) standard deviation; stddev 0 for a single value.
std::pair<double, double> mean_std(const std::vector<double>& values);
/// Groups ok cells by (model, defense, attack, rate) in first-seen order.
std::vector<Summary> summarize(const std::vector<ReportCell>& cells);

/// Graph for config.dataset with features attached (graphlet vectors for
/// featureless data) but no split.
SparseGraph load_dataset(const RunConfig& config);

ExperimentReport run_experiment(const RunConfig& config);
/// Direct attack with defenses none, guard-no-prune, guard-no-memory, guard,
/// sharing each seed's attacks across all four.
ExperimentReport run_ablation(const RunConfig& config);
/// Non-targeted attack at every rate with no defense and the guard.
ExperimentReport run_intensity_sweep(const RunConfig& config,
                                     const std::vector<double>& rates = {0.05, 0.10, 0.15, 0.20,
                                                                         0.25});

/// Runs each listed defense on the same attacks; the building block of the
/// three drivers above.
ExperimentReport run_defenses(const RunConfig& config, const std::vector<Defense>& defenses);

struct ScalingRow {
  std::size_t edges = 0;
  std::size_t nodes = 0;
  std::size_t dim = 0;
  double seconds = 0.0;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least-squares line through (x, y) with its coefficient of determination.
void linear_fit(const std::vector<double>& x, const std::vector<double>& y, double& slope,
                double& intercept, double& r2);

/// Time of one guard estimation pass (similarity, importance, pruning,
/// memory) on random graphs with the given undirected edge counts and
/// n = E / 4 nodes. Minimum over trials.
ScalingReport scaling_bench(const std::vector<std::size_t>& sizes, std::size_t dim = 16,
                            std::size_t trials = 5, std::uint64_t seed = 0);

}  // namespace guardnet
