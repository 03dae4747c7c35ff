#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guardnet/graph.hpp"
#include "guardnet/graph_ops.hpp"
#include "guardnet/tensor.hpp"

namespace guardnet {

class Model;
struct GdvTable;

/// Per-layer message weights: one per stored directed edge plus one per node
/// for the self term.
struct EdgeWeights {
  Tensor edge;
  Tensor self;
};

enum class SimilarityMode { feature_cosine, graphlet };

std::string to_string(SimilarityMode mode);

struct GuardConfig {
  double p0 = 0.5;
  bool pruning = true;   // false: every pruning indicator is 1
  bool memory = true;    // false: memory coefficient forced to 0 in all layers
  SimilarityMode mode = SimilarityMode::feature_cosine;
  double penalty = 1e-3; // weight of the auxiliary term on pruned edges
};

/// Everything computed by the guard for one layer, copied out for auditing.
struct LayerTrace {
  std::size_t layer = 0;
  double beta = 0.0;
  std::vector<double> similarity;  // raw cosine, per directed edge
  std::vector<double> alpha;
  std::vector<double> alpha_self;
  std::vector<double> score;       // sigmoid(c W)
  std::vector<std::uint8_t> kept;
  std::vector<double> alpha_hat;
  std::vector<double> omega;
  std::vector<double> omega_self;
};

/// Mutable state carried across the layers of one forward pass.
struct GuardPass {
  std::optional<EdgeWeights> previous;
  std::optional<Tensor> penalty;
  bool record_trace = false;
  std::vector<LayerTrace> traces;
};

/// Trainable defense state: pruning map W (2 -> 1, no bias) and the memory
/// coefficient beta = sigmoid(beta_logit).
class Guard {
 public:
  explicit Guard(GuardConfig config = {});

  const GuardConfig& config() const { return config_; }
  GuardConfig& mutable_config() { return config_; }

  Tensor& prune_weight() { return prune_weight_; }
  const Tensor& prune_weight() const { return prune_weight_; }
  Tensor& beta_logit() { return beta_logit_; }
  const Tensor& beta_logit() const { return beta_logit_; }
  /// Memory coefficient applied from layer 1 on (0 when memory is off).
  double beta() const;

  /// Structural vectors used instead of embeddings in graphlet mode; rows
  /// must cover every node of the graphs this guard is applied to.
  void set_structural_vectors(Tensor vectors) { structural_ = std::move(vectors); }
  const std::optional<Tensor>& structural_vectors() const { return structural_; }

  std::vector<Tensor> parameters() const { return {prune_weight_, beta_logit_}; }
  Guard clone() const;

  /// Importance estimation, pruning and memory for layer k on embeddings h.
  EdgeWeights layer_weights(Tape& tape, const SparseGraph& graph, std::size_t k,
                            const Tensor& h, GuardPass& pass) const;

 private:
  GuardConfig config_;
  Tensor prune_weight_;
  Tensor beta_logit_;
  std::optional<Tensor> structural_;
};

// ---------------------------------------------------------------------------
// Value-level building blocks (no gradient tape).

/// Cosine similarity; 0 when either vector has zero norm.
double similarity(std::span<const double> a, std::span<const double> b);

struct ImportanceWeights {
  std::vector<double> similarity;  // raw, per directed edge
  std::vector<double> edge;        // alpha_uv
  std::vector<double> self;        // alpha_uu
  std::vector<std::size_t> support;
};

/// Clamped-cosine importance weights for every stored edge of graph from
/// the rows of embeddings.
ImportanceWeights estimate_importance(const SparseGraph& graph, const Tensor& embeddings);
/// Same, from precomputed per-edge similarities.
ImportanceWeights importance_from_similarity(const SparseGraph& graph,
                                             std::span<const double> similarity);

struct PruneResult {
  std::vector<double> alpha_hat;
  std::vector<double> score;
  std::vector<std::uint8_t> kept;
};

/// alpha_hat_uv = alpha_uv if sigmoid([alpha_uv, alpha_vu] . w) >= p0, else 0.
PruneResult prune(std::span<const std::size_t> reverse, std::span<const double> alpha,
                  std::span<const double> w, double p0);

/// k == 0: alpha_hat; otherwise beta * previous + (1 - beta) * alpha_hat.
std::vector<double> memory_update(std::span<const double> previous,
                                  std::span<const double> alpha_hat, double beta,
                                  std::size_t k);

/// Cosine similarity of log(1 + x) scaled graphlet degree vectors.
double graphlet_similarity(std::size_t u, std::size_t v, const GdvTable& table);

/// log(1 + count) matrix [n x orbits] used as structural vectors.
Tensor log_scaled_gdv(const GdvTable& table);

/// Subtracts each column's mean. Applied to structural vectors so that
/// dissimilar roles get negative cosine, which the importance ReLU drops;
/// raw GDVs are nonnegative and every pair would otherwise look alike.
Tensor center_columns(const Tensor& x);

/// Forward pass of model on graph with the given guard intercepting every
/// layer's aggregation.
Tensor guarded_forward(Tape& tape, const Model& model, const SparseGraph& graph,
                       const Guard& guard, GuardPass* pass = nullptr);

/// One CSV per layer: u,v,s,alpha,score,pruned,omega.
void export_trace(const std::vector<LayerTrace>& traces, const SparseGraph& graph,
                  const std::filesystem::path& dir);

}  // namespace guardnet
