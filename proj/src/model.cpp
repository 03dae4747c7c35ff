#include "guardnet/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "guardnet/graph_ops.hpp"
#include "guardnet/optim.hpp"

namespace guardnet {

namespace fs = std::filesystem;

std::string to_string(ModelKind kind) { return kind == ModelKind::gcn ? "gcn" : "gin"; }

ModelKind parse_model_kind(const std::string& name) {
  if (name == "gcn" || name == "GCN") return ModelKind::gcn;
  if (name == "gin" || name == "GIN") return ModelKind::gin;
  throw ValidationError("unknown model kind '" + name + "'");
}

void LayerSpec::validate() const {
  if (in_dim == 0 || out_dim == 0) {
    throw ValidationError("layer dimensions must be positive (in=" + std::to_string(in_dim) +
                          ", out=" + std::to_string(out_dim) + ")");
  }
}

namespace {

Tensor uniform_weight(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(fan_in * fan_out);
  for (double& v : values) v = dist(rng);
  return Tensor({fan_in, fan_out}, std::move(values), true);
}

Tensor zero_bias(std::size_t n) { return Tensor::zeros({n}, true); }

class GcnLayer final : public MessagePassingLayer {
 public:
  GcnLayer(const LayerSpec& spec, std::mt19937_64& rng)
      : MessagePassingLayer(spec),
        weight_(uniform_weight(spec.in_dim, spec.out_dim, rng)),
        bias_(zero_bias(spec.out_dim)) {}

  Tensor message(Tape& tape, const Tensor& h) const override {
    return ops::matmul(tape, h, weight_);
  }

  Tensor standard_aggregate(Tape& tape, const SparseGraph& graph,
                            const Tensor& messages) const override {
    return ops::spmm(tape, gcn_normalized_adjacency(graph), messages);
  }

  Tensor update(Tape& tape, const Tensor& aggregated) const override {
    Tensor out = ops::add_rowwise(tape, aggregated, bias_);
    return spec_.activation ? ops::relu(tape, out) : out;
  }

  std::vector<NamedParameter> parameters() const override {
    return {{"weight", weight_, true}, {"bias", bias_, false}};
  }

  std::unique_ptr<MessagePassingLayer> clone() const override {
    auto copy = std::unique_ptr<GcnLayer>(new GcnLayer(*this));
    copy->weight_ = weight_.clone();
    copy->bias_ = bias_.clone();
    return copy;
  }

 private:
  GcnLayer(const GcnLayer&) = default;
  Tensor weight_;
  Tensor bias_;
};

class GinLayer final : public MessagePassingLayer {
 public:
  GinLayer(const LayerSpec& spec, std::mt19937_64& rng) : MessagePassingLayer(spec) {
    const std::size_t hidden = spec.hidden_dim ? spec.hidden_dim : spec.out_dim;
    w0_ = uniform_weight(spec.in_dim, hidden, rng);
    b0_ = zero_bias(hidden);
    w1_ = uniform_weight(hidden, spec.out_dim, rng);
    b1_ = zero_bias(spec.out_dim);
  }

  Tensor message(Tape&, const Tensor& h) const override { return h; }

  Tensor standard_aggregate(Tape& tape, const SparseGraph& graph,
                            const Tensor& messages) const override {
    // (1 + eps) h_u + sum_v h_v with eps = 0.
    const Csr& p = graph.csr();
    SparseMatrix adj;
    adj.pattern.n_rows = adj.pattern.n_cols = p.n_rows;
    adj.pattern.row_ptr.assign(p.n_rows + 1, 0);
    adj.pattern.col.reserve(p.nnz() + p.n_rows);
    for (std::size_t u = 0; u < p.n_rows; ++u) {
      bool self_done = false;
      for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
        if (!self_done && p.col[e] > u) {
          adj.pattern.col.push_back(u);
          self_done = true;
        }
        adj.pattern.col.push_back(p.col[e]);
      }
      if (!self_done) adj.pattern.col.push_back(u);
      adj.pattern.row_ptr[u + 1] = adj.pattern.col.size();
    }
    adj.values.assign(adj.pattern.col.size(), 1.0);
    return ops::spmm(tape, adj, messages);
  }

  Tensor update(Tape& tape, const Tensor& aggregated) const override {
    Tensor hidden = ops::relu(tape, ops::add_rowwise(tape, ops::matmul(tape, aggregated, w0_), b0_));
    Tensor out = ops::add_rowwise(tape, ops::matmul(tape, hidden, w1_), b1_);
    return spec_.activation ? ops::relu(tape, out) : out;
  }

  std::vector<NamedParameter> parameters() const override {
    return {{"mlp0.weight", w0_, true},
            {"mlp0.bias", b0_, false},
            {"mlp1.weight", w1_, true},
            {"mlp1.bias", b1_, false}};
  }

  std::unique_ptr<MessagePassingLayer> clone() const override {
    auto copy = std::unique_ptr<GinLayer>(new GinLayer(*this));
    copy->w0_ = w0_.clone();
    copy->b0_ = b0_.clone();
    copy->w1_ = w1_.clone();
    copy->b1_ = b1_.clone();
    return copy;
  }

 private:
  GinLayer(const GinLayer&) = default;
  Tensor w0_, b0_, w1_, b1_;
};

}  // namespace

Tensor MessagePassingLayer::aggregate(Tape& tape, const Csr& pattern, const EdgeWeights& weights,
                                      const Tensor& messages) const {
  return ops::edge_aggregate(tape, pattern, weights.edge, weights.self, messages);
}

std::unique_ptr<MessagePassingLayer> make_gcn_layer(const LayerSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  return std::make_unique<GcnLayer>(spec, rng);
}

std::unique_ptr<MessagePassingLayer> make_gin_layer(const LayerSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  return std::make_unique<GinLayer>(spec, rng);
}

SparseMatrix gcn_normalized_adjacency(const SparseGraph& graph) {
  const Csr& p = graph.csr();
  const std::size_t n = p.n_rows;
  std::vector<double> inv_sqrt(n);
  for (std::size_t u = 0; u < n; ++u)
    inv_sqrt[u] = 1.0 / std::sqrt(static_cast<double>(graph.degree(u) + 1));
  SparseMatrix adj;
  adj.pattern.n_rows = adj.pattern.n_cols = n;
  adj.pattern.row_ptr.assign(n + 1, 0);
  adj.pattern.col.reserve(p.nnz() + n);
  adj.values.reserve(p.nnz() + n);
  for (std::size_t u = 0; u < n; ++u) {
    bool self_done = false;
    auto push_self = [&] {
      adj.pattern.col.push_back(u);
      adj.values.push_back(inv_sqrt[u] * inv_sqrt[u]);
      self_done = true;
    };
    for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
      const std::size_t v = p.col[e];
      if (!self_done && v > u) push_self();
      adj.pattern.col.push_back(v);
      adj.values.push_back(inv_sqrt[u] * inv_sqrt[v]);
    }
    if (!self_done) push_self();
    adj.pattern.row_ptr[u + 1] = adj.pattern.col.size();
  }
  return adj;
}

Model::Model(const ModelConfig& config) : config_(config) {
  if (config.layers == 0) throw ValidationError("model needs at least one layer");
  if (config.num_classes == 0) throw ValidationError("model needs num_classes > 0");
  std::mt19937_64 rng(config.seed);
  std::size_t in = config.in_dim;
  for (std::size_t k = 0; k < config.layers; ++k) {
    const bool last = k + 1 == config.layers;
    LayerSpec spec{in, last ? config.num_classes : config.hidden_dim, config.kind, !last,
                   config.hidden_dim};
    layers_.push_back(config.kind == ModelKind::gcn ? make_gcn_layer(spec, rng)
                                                    : make_gin_layer(spec, rng));
    in = spec.out_dim;
  }
}

Model Model::clone() const {
  Model copy(config_);
  for (std::size_t k = 0; k < layers_.size(); ++k) copy.layers_[k] = layers_[k]->clone();
  if (guard_) copy.guard_ = guard_->clone();
  return copy;
}

void Model::attach_guard(Guard guard) { guard_ = std::move(guard); }

const Guard& Model::guard() const {
  if (!guard_) throw StateError("model has no guard attached");
  return *guard_;
}

Guard& Model::guard() {
  if (!guard_) throw StateError("model has no guard attached");
  return *guard_;
}

Tensor Model::forward(Tape& tape, const SparseGraph& graph, const ForwardOptions& options) const {
  if (!graph.has_features()) throw PreconditionError("forward needs node features");
  const Tensor& x = graph.features();
  if (x.cols() != layers_.front()->spec().in_dim) {
    throw ShapeError("feature dimension " + std::to_string(x.cols()) +
                     " does not match layer-0 input " +
                     std::to_string(layers_.front()->spec().in_dim));
  }
  if (options.weights && options.weights->size() != layers_.size()) {
    throw ShapeError("expected edge weights for " + std::to_string(layers_.size()) +
                     " layers, got " + std::to_string(options.weights->size()));
  }
  const Guard* guard = options.guard ? options.guard : (guard_ ? &*guard_ : nullptr);
  GuardPass local_pass;
  GuardPass& pass = options.pass ? *options.pass : local_pass;
  const bool drop = options.training && config_.dropout > 0.0;
  if (drop && !options.rng) throw PreconditionError("training forward needs a generator");

  Tensor h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const MessagePassingLayer& layer = *layers_[k];
    std::optional<EdgeWeights> weights;
    if (options.weights) {
      weights = (*options.weights)[k];
      if (weights->edge.size() != graph.csr().nnz() || weights->self.size() != graph.n_nodes()) {
        throw ShapeError("layer " + std::to_string(k) + " weights: expected " +
                         std::to_string(graph.csr().nnz()) + " edge and " +
                         std::to_string(graph.n_nodes()) + " self weights");
      }
    } else if (guard) {
      weights = guard->layer_weights(tape, graph, k, h, pass);
    }
    const Tensor input = drop ? ops::dropout(tape, h, config_.dropout, *options.rng) : h;
    const Tensor messages = layer.message(tape, input);
    const Tensor aggregated = weights ? layer.aggregate(tape, graph.csr(), *weights, messages)
                                      : layer.standard_aggregate(tape, graph, messages);
    h = layer.update(tape, aggregated);
  }
  return h;
}

std::vector<NamedParameter> Model::parameters() const {
  std::vector<NamedParameter> out;
  for (std::size_t k = 0; k < layers_.size(); ++k)
    for (auto& p : layers_[k]->parameters())
      out.push_back({"layer" + std::to_string(k) + "." + p.name, p.tensor, p.decay});
  if (guard_) {
    out.push_back({"guard.prune_weight", guard_->prune_weight(), false});
    out.push_back({"guard.beta_logit", guard_->beta_logit(), false});
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
  const std::size_t c = logits.cols();
  std::size_t best = 0;
  for (std::size_t j = 1; j < c; ++j)
    if (logits.at(row, j) > logits.at(row, best)) best = j;
  return best;
}

double accuracy(const Tensor& logits, std::span<const std::size_t> labels, const Mask& mask) {
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ++total;
    correct += argmax_row(logits, i) == labels[i];
  }
  if (total == 0) throw PreconditionError("accuracy: mask selects no nodes");
  return static_cast<double>(correct) / static_cast<double>(total);
}

Tensor predict(const Model& model, const SparseGraph& graph) {
  Tape tape;
  tape.set_recording(false);
  return model.forward(tape, graph);
}

double evaluate(const Model& model, const SparseGraph& graph, const Mask& mask) {
  if (count_in_mask(mask) == 0) throw PreconditionError("evaluate: mask selects no nodes");
  return accuracy(predict(model, graph), graph.labels(), mask);
}

TrainHistory train(Model& model, const SparseGraph& graph, const TrainConfig& config) {
  if (!graph.has_masks()) throw PreconditionError("train needs train/val/test masks");
  if (!graph.has_labels()) throw PreconditionError("train needs labels");
  const Masks& masks = graph.masks();

  ParamGroup decayed{{}, config.weight_decay}, plain{{}, 0.0};
  const auto params = model.parameters();
  for (const auto& p : params) (p.decay ? decayed : plain).params.push_back(p.tensor);
  Adam adam({decayed, plain}, AdamConfig{config.lr});
  // Parameters the loss does not reach in some epoch (the pruning map when
  // nothing is pruned) still need a populated, zero gradient.
  adam.zero_grad();

  std::mt19937_64 rng(config.seed);
  TrainHistory history;
  std::vector<std::vector<double>> best(params.size());
  double best_val = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Tape tape;
    GuardPass pass;
    ForwardOptions options;
    options.training = true;
    options.rng = &rng;
    options.pass = &pass;
    Tensor logits = model.forward(tape, graph, options);
    Tensor loss = ops::softmax_cross_entropy(tape, logits, graph.labels(), masks.train);
    if (!std::isfinite(loss.item())) {
      throw TrainingError("loss became non-finite at epoch " + std::to_string(epoch), epoch);
    }
    Tensor objective = pass.penalty ? ops::add(tape, loss, *pass.penalty) : loss;
    tape.backward(objective);
    adam.step();

    const Tensor eval_logits = predict(model, graph);
    const double train_acc = accuracy(eval_logits, graph.labels(), masks.train);
    const double val_acc = accuracy(eval_logits, graph.labels(), masks.val);
    history.loss.push_back(loss.item());
    history.train_accuracy.push_back(train_acc);
    history.val_accuracy.push_back(val_acc);
    history.epochs_run = epoch;

    if (val_acc > best_val) {
      best_val = val_acc;
      history.best_epoch = epoch;
      since_best = 0;
      for (std::size_t i = 0; i < params.size(); ++i)
        best[i].assign(params[i].tensor.data().begin(), params[i].tensor.data().end());
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    std::copy(best[i].begin(), best[i].end(), t.data().begin());
  }
  return history;
}

void save_checkpoint(const Model& model, const fs::path& prefix) {
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  std::ofstream blob(prefix.string() + ".bin", std::ios::binary);
  std::ofstream manifest(prefix.string() + ".manifest");
  if (!blob || !manifest) throw ValidationError("cannot write checkpoint " + prefix.string());
  std::size_t offset = 0;
  for (const auto& p : model.parameters()) {
    const auto data = p.tensor.data();
    blob.write(reinterpret_cast<const char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(double)));
    manifest << p.name << ' ' << shape_string(p.tensor.shape()) << ' ' << offset << '\n';
    offset += data.size();
  }
}

void load_checkpoint(Model& model, const fs::path& prefix) {
  std::ifstream blob(prefix.string() + ".bin", std::ios::binary);
  std::ifstream manifest(prefix.string() + ".manifest");
  if (!blob || !manifest) throw ValidationError("cannot read checkpoint " + prefix.string());
  blob.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(blob.tellg());
  blob.seekg(0);
  std::vector<double> values(bytes / sizeof(double), 0.0);
  blob.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));

  std::string line;
  auto params = model.parameters();
  std::size_t i = 0;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string name, shape;
    std::size_t offset = 0;
    is >> name >> shape >> offset;
    if (i >= params.size() || params[i].name != name ||
        shape_string(params[i].tensor.shape()) != shape) {
      throw ValidationError("checkpoint entry '" + line + "' does not match the model");
    }
    auto data = params[i].tensor.data();
    if (offset + data.size() > values.size()) throw ValidationError("checkpoint blob truncated");
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), data.size(), data.begin());
    ++i;
  }
  if (i != params.size()) throw ValidationError("checkpoint is missing parameters");
}

}  // namespace guardnet
