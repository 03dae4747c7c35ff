#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "guardnet/graph.hpp"
#include "guardnet/guard.hpp"
#include "guardnet/ops.hpp"
#include "guardnet/tensor.hpp"

namespace guardnet {

enum class ModelKind { gcn, gin };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  ModelKind kind = ModelKind::gcn;
  bool activation = true;
  std::size_t hidden_dim = 0;  // GIN MLP width; 0 means out_dim

  void validate() const;
};

struct NamedParameter {
  std::string name;
  Tensor tensor;
  bool decay = true;  // subject to weight decay
};

/// One message-passing layer split into MSG / AGG / UPD so that a guard can
/// replace the aggregation weights while MSG stays untouched.
class MessagePassingLayer {
 public:
  explicit MessagePassingLayer(LayerSpec spec) : spec_(spec) {}
  virtual ~MessagePassingLayer() = default;

  const LayerSpec& spec() const { return spec_; }

  /// MSG: per-node message matrix.
  virtual Tensor message(Tape& tape, const Tensor& h) const = 0;
  /// AGG: weighted sum over the closed neighborhood (self weight included).
  Tensor aggregate(Tape& tape, const Csr& pattern, const EdgeWeights& weights,
                   const Tensor& messages) const;
  /// AGG with the layer's own constant normalization.
  virtual Tensor standard_aggregate(Tape& tape, const SparseGraph& graph,
                                    const Tensor& messages) const = 0;
  /// UPD: new embeddings from the aggregated messages.
  virtual Tensor update(Tape& tape, const Tensor& aggregated) const = 0;

  virtual std::vector<NamedParameter> parameters() const = 0;
  virtual std::unique_ptr<MessagePassingLayer> clone() const = 0;

 protected:
  LayerSpec spec_;
};

/// h' = act(sum_v w_uv h_v W + b); standard weights are the symmetric
/// normalization of A + I.
std::unique_ptr<MessagePassingLayer> make_gcn_layer(const LayerSpec& spec, std::mt19937_64& rng);
/// h' = act(MLP(w_uu h_u + sum_v w_uv h_v)); standard weights are 1 (eps = 0).
std::unique_ptr<MessagePassingLayer> make_gin_layer(const LayerSpec& spec, std::mt19937_64& rng);

/// D^{-1/2} (A + I) D^{-1/2} with D the degree of A + I.
SparseMatrix gcn_normalized_adjacency(const SparseGraph& graph);

struct ModelConfig {
  ModelKind kind = ModelKind::gcn;
  std::size_t in_dim = 0;
  std::size_t hidden_dim = 16;
  std::size_t num_classes = 0;
  std::size_t layers = 2;
  double dropout = 0.5;
  std::uint64_t seed = 0;
};

struct ForwardOptions {
  bool training = false;
  std::mt19937_64* rng = nullptr;           // needed for dropout in training
  const std::vector<EdgeWeights>* weights = nullptr;  // explicit per-layer weights
  const Guard* guard = nullptr;             // overrides the attached guard
  GuardPass* pass = nullptr;                // receives traces / penalty
};

class Model {
 public:
  explicit Model(const ModelConfig& config);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  /// Deep copy of parameters and guard state.
  Model clone() const;

  const ModelConfig& config() const { return config_; }
  std::size_t num_layers() const { return layers_.size(); }
  const MessagePassingLayer& layer(std::size_t k) const { return *layers_.at(k); }

  void attach_guard(Guard guard);
  void detach_guard() { guard_.reset(); }
  bool has_guard() const { return guard_.has_value(); }
  const Guard& guard() const;
  Guard& guard();

  /// Logits [n x C]. Without weights or guard, every layer uses its standard
  /// normalization.
  Tensor forward(Tape& tape, const SparseGraph& graph, const ForwardOptions& options = {}) const;

  std::vector<NamedParameter> parameters() const;

 private:
  ModelConfig config_;
  std::vector<std::unique_ptr<MessagePassingLayer>> layers_;
  std::optional<Guard> guard_;
};

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t patience = 10;
  double lr = 0.01;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> loss;
  std::vector<double> train_accuracy;
  std::vector<double> val_accuracy;
  std::size_t best_epoch = 0;  // 1-based
  std::size_t epochs_run = 0;
};

/// Adam on the train-mask cross entropy with early stopping on validation
/// accuracy. The model is left at its best-validation parameters.
TrainHistory train(Model& model, const SparseGraph& graph, const TrainConfig& config);

/// argmax accuracy over masked rows, ties broken toward the lower class.
double evaluate(const Model& model, const SparseGraph& graph, const Mask& mask);
double accuracy(const Tensor& logits, std::span<const std::size_t> labels, const Mask& mask);
std::size_t argmax_row(const Tensor& logits, std::size_t row);
Tensor predict(const Model& model, const SparseGraph& graph);

/// Flat little-endian float64 blob plus a text manifest "name shape offset".
void save_checkpoint(const Model& model, const std::filesystem::path& prefix);
void load_checkpoint(Model& model, const std::filesystem::path& prefix);

}  // namespace guardnet
