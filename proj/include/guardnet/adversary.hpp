#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "guardnet/graph.hpp"
#include "guardnet/model.hpp"
#include "guardnet/perturbation.hpp"

namespace guardnet {

struct AttackConfig {
  AttackKind kind = AttackKind::direct;
  double rate = 0.2;               // non-targeted budget: floor(rate * E)
  std::size_t pool_size = 500;     // most dissimilar insertion candidates per attacker
  std::size_t influence_neighbors = 5;
  std::size_t batch = 20;          // non-targeted flips applied per scoring round
  std::size_t samples = 400;       // non-targeted candidates of each type per round
  std::uint64_t seed = 0;
};

/// Frozen two-layer GCN used to score candidate flips. Scoring recomputes only
/// the logits that a flip can reach.
class Surrogate {
 public:
  /// Copies the weights of a trained 2-layer unguarded GCN.
  explicit Surrogate(const Model& model);
  /// Trains a fresh GCN on graph (which must carry masks) and wraps it.
  static Surrogate fit(const SparseGraph& graph, std::uint64_t seed,
                       const TrainConfig& train_config = {});

  std::size_t hidden_dim() const { return hidden_; }
  std::size_t num_classes() const { return classes_; }

  /// Logits of every node on graph; matches Model::forward in eval mode.
  std::vector<double> logits(const SparseGraph& graph) const;

  // Internal accessors for the scoring engine.
  const std::vector<double>& w0() const { return w0_; }
  const std::vector<double>& b0() const { return b0_; }
  const std::vector<double>& w1() const { return w1_; }
  const std::vector<double>& b1() const { return b1_; }

 private:
  std::size_t in_ = 0, hidden_ = 0, classes_ = 0;
  std::vector<double> w0_, b0_, w1_, b1_;
};

/// Greedy flips incident to target, budget deg(target).
Perturbation attack_direct(const SparseGraph& graph, std::size_t target,
                           const Surrogate& surrogate, const AttackConfig& config = {});

/// Greedy flips incident to the highest-degree neighbors of target (never to
/// target itself), budget deg(v) per attacker v.
Perturbation attack_influence(const SparseGraph& graph, std::size_t target,
                              const Surrogate& surrogate, const AttackConfig& config = {});

/// Batched greedy flips raising the surrogate's loss over all nodes (train
/// labels plus surrogate predictions elsewhere); every flip touches a test node.
Perturbation attack_nontargeted(const SparseGraph& graph, const Surrogate& surrogate,
                                const AttackConfig& config);

/// Margin of node u: true logit minus best other logit.
double classification_margin(const Tensor& logits, std::size_t u, std::size_t label);

/// n/4 largest-margin, n/4 smallest-margin and the rest drawn at random from
/// correctly classified test nodes of degree >= min_degree. Disjoint.
std::vector<std::size_t> select_targets(const SparseGraph& graph, const Model& model,
                                        std::size_t n = 40, std::uint64_t seed = 0,
                                        std::size_t min_degree = 0);

}  // namespace guardnet
