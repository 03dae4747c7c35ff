#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "guardnet/graph.hpp"

namespace guardnet {

enum class AttackKind { direct, influence, non_targeted };

std::string to_string(AttackKind kind);
AttackKind parse_attack_kind(const std::string& name);

/// One greedy decision: the chosen flip, its score, and the best score seen
/// among the candidates of the same batch.
struct FlipRecord {
  Edge edge;
  bool insertion = true;
  double score = 0.0;
  double batch_best = 0.0;
};

/// Budgeted set of undirected edge insertions and deletions. Pairs are kept
/// normalized (first < second).
struct Perturbation {
  std::vector<Edge> insertions;
  std::vector<Edge> deletions;
  std::size_t budget = 0;
  std::vector<std::size_t> targets;
  std::vector<std::size_t> attackers;
  AttackKind kind = AttackKind::direct;
  std::uint64_t seed = 0;
  std::vector<FlipRecord> log;

  std::size_t size() const { return insertions.size() + deletions.size(); }
};

inline Edge normalized(std::size_t u, std::size_t v) {
  return u < v ? Edge{u, v} : Edge{v, u};
}

/// Checks the budget, attacker-locality and disjointness invariants.
/// Throws PreconditionError naming the violated rule.
void check_perturbation(const Perturbation& pert);

/// New graph with the flips applied. Features are shared with the input.
SparseGraph apply_perturbation(const SparseGraph& graph, const Perturbation& pert);

/// Text format: "key value" header lines (budget, kind, seed, targets,
/// attackers) followed by "+ u v" / "- u v" lines.
void write_perturbation(const Perturbation& pert, const std::filesystem::path& path);
Perturbation read_perturbation(const std::filesystem::path& path);

}  // namespace guardnet
