#include "guardnet/guard.hpp"

#include <cmath>
#include <fstream>

#include "guardnet/graphlet.hpp"
#include "guardnet/model.hpp"

namespace guardnet {

namespace fs = std::filesystem;

std::string to_string(SimilarityMode mode) {
  return mode == SimilarityMode::graphlet ? "graphlet" : "feature-cosine";
}

Guard::Guard(GuardConfig config)
    : config_(config),
      prune_weight_(Tensor::zeros({2, 1}, true)),
      beta_logit_(Tensor::zeros({1}, true)) {
  if (!(config_.p0 >= 0.0 && config_.p0 <= 1.0)) {
    throw ValidationError("p0 must lie in [0, 1], got " + std::to_string(config_.p0));
  }
  if (config_.penalty < 0.0) throw ValidationError("pruning penalty must be nonnegative");
}

double Guard::beta() const { return config_.memory ? sigmoid(beta_logit_.item()) : 0.0; }

Guard Guard::clone() const {
  Guard copy(config_);
  copy.prune_weight_ = prune_weight_.clone();
  copy.beta_logit_ = beta_logit_.clone();
  copy.structural_ = structural_;
  return copy;
}

EdgeWeights Guard::layer_weights(Tape& tape, const SparseGraph& graph, std::size_t k,
                                 const Tensor& h, GuardPass& pass) const {
  const Csr& pattern = graph.csr();
  const std::size_t nnz = pattern.nnz();

  Tensor source = h;
  if (config_.mode == SimilarityMode::graphlet) {
    if (!structural_) throw StateError("graphlet mode needs structural vectors");
    if (structural_->rows() != graph.n_nodes()) {
      throw StateError("structural vectors cover " + std::to_string(structural_->rows()) +
                       " nodes, graph has " + std::to_string(graph.n_nodes()));
    }
    source = *structural_;
  }
  if (source.rows() != graph.n_nodes()) {
    throw ShapeError("embeddings have " + std::to_string(source.rows()) + " rows, graph has " +
                     std::to_string(graph.n_nodes()) + " nodes");
  }

  const Tensor sim = ops::edge_cosine(tape, pattern, source);
  const ops::Importance imp = ops::normalize_importance(tape, pattern, ops::relu(tape, sim));

  const Tensor pairs = ops::edge_pairs(tape, graph.reverse(), imp.edge);
  const Tensor score = ops::sigmoid(tape, ops::matmul(tape, pairs, prune_weight_));

  std::vector<double> keep(nnz, 1.0);
  std::size_t pruned = 0;
  if (config_.pruning) {
    for (std::size_t e = 0; e < nnz; ++e) {
      if (score[e] < config_.p0) {
        keep[e] = 0.0;
        ++pruned;
      }
    }
  }
  const Tensor keep_mask({nnz}, keep);
  const Tensor alpha_hat = ops::mul(tape, imp.edge, keep_mask);

  if (pruned > 0 && config_.penalty > 0.0) {
    std::vector<double> dropped(nnz);
    for (std::size_t e = 0; e < nnz; ++e) dropped[e] = 1.0 - keep[e];
    const Tensor on_pruned = ops::mul(tape, score, Tensor({nnz, 1}, std::move(dropped)));
    const Tensor term = ops::scale(tape, ops::sum(tape, on_pruned), config_.penalty);
    pass.penalty = pass.penalty ? ops::add(tape, *pass.penalty, term) : term;
  }

  EdgeWeights omega{alpha_hat, imp.self};
  double beta_value = 0.0;
  if (k > 0 && config_.memory) {
    if (!pass.previous) throw StateError("memory needs the previous layer's weights");
    const Tensor beta = ops::sigmoid(tape, beta_logit_);
    const Tensor keep_fraction = ops::shift(tape, ops::scale(tape, beta, -1.0), 1.0);
    const auto blend = [&](const Tensor& prev, const Tensor& cur) {
      return ops::add(tape, ops::mul(tape, beta, prev), ops::mul(tape, keep_fraction, cur));
    };
    omega = EdgeWeights{blend(pass.previous->edge, alpha_hat), blend(pass.previous->self, imp.self)};
    beta_value = beta.item();
  }
  pass.previous = omega;

  if (pass.record_trace) {
    LayerTrace t;
    t.layer = k;
    t.beta = beta_value;
    t.similarity.assign(sim.data().begin(), sim.data().end());
    t.alpha.assign(imp.edge.data().begin(), imp.edge.data().end());
    t.alpha_self.assign(imp.self.data().begin(), imp.self.data().end());
    t.score.assign(score.data().begin(), score.data().end());
    t.kept.resize(nnz);
    for (std::size_t e = 0; e < nnz; ++e) t.kept[e] = keep[e] != 0.0;
    t.alpha_hat.assign(alpha_hat.data().begin(), alpha_hat.data().end());
    t.omega.assign(omega.edge.data().begin(), omega.edge.data().end());
    t.omega_self.assign(omega.self.data().begin(), omega.self.data().end());
    pass.traces.push_back(std::move(t));
  }
  return omega;
}

// ---------------------------------------------------------------------------

double similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("similarity of vectors with lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

ImportanceWeights importance_from_similarity(const SparseGraph& graph,
                                             std::span<const double> sim) {
  const Csr& p = graph.csr();
  if (sim.size() != p.nnz()) {
    throw ShapeError("expected " + std::to_string(p.nnz()) + " similarities, got " +
                     std::to_string(sim.size()));
  }
  ImportanceWeights w;
  w.similarity.assign(sim.begin(), sim.end());
  w.edge.assign(p.nnz(), 0.0);
  w.self.assign(p.n_rows, 1.0);
  w.support.assign(p.n_rows, 0);
  for (std::size_t u = 0; u < p.n_rows; ++u) {
    double total = 0.0;
    std::size_t support = 0;
    for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
      const double s = std::max(sim[e], 0.0);
      total += s;
      support += s > 0.0;
    }
    w.support[u] = support;
    if (support == 0) continue;
    const double factor = static_cast<double>(support) / static_cast<double>(support + 1);
    for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e)
      w.edge[e] = std::max(sim[e], 0.0) / total * factor;
    w.self[u] = 1.0 / static_cast<double>(support + 1);
  }
  return w;
}

ImportanceWeights estimate_importance(const SparseGraph& graph, const Tensor& embeddings) {
  if (embeddings.rank() != 2 || embeddings.rows() != graph.n_nodes()) {
    throw ShapeError("embeddings " + shape_string(embeddings.shape()) + " do not cover " +
                     std::to_string(graph.n_nodes()) + " nodes");
  }
  const Csr& p = graph.csr();
  const std::size_t d = embeddings.cols();
  const auto x = embeddings.data();
  std::vector<double> sim(p.nnz());
  for (std::size_t u = 0; u < p.n_rows; ++u)
    for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e)
      sim[e] = similarity(x.subspan(u * d, d), x.subspan(p.col[e] * d, d));
  return importance_from_similarity(graph, sim);
}

PruneResult prune(std::span<const std::size_t> reverse, std::span<const double> alpha,
                  std::span<const double> w, double p0) {
  if (w.size() != 2) throw ShapeError("pruning weight must have 2 entries");
  if (reverse.size() != alpha.size()) throw ShapeError("reverse index and alpha differ in size");
  PruneResult r;
  r.alpha_hat.resize(alpha.size());
  r.score.resize(alpha.size());
  r.kept.resize(alpha.size());
  for (std::size_t e = 0; e < alpha.size(); ++e) {
    r.score[e] = sigmoid(alpha[e] * w[0] + alpha[reverse[e]] * w[1]);
    r.kept[e] = r.score[e] >= p0;
    r.alpha_hat[e] = r.kept[e] ? alpha[e] : 0.0;
  }
  return r;
}

std::vector<double> memory_update(std::span<const double> previous,
                                  std::span<const double> alpha_hat, double beta,
                                  std::size_t k) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw StateError("memory coefficient " + std::to_string(beta) + " outside [0, 1]");
  }
  if (k == 0) return {alpha_hat.begin(), alpha_hat.end()};
  if (previous.size() != alpha_hat.size()) throw ShapeError("memory inputs differ in size");
  std::vector<double> out(alpha_hat.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = beta * previous[i] + (1.0 - beta) * alpha_hat[i];
  return out;
}

Tensor log_scaled_gdv(const GdvTable& table) {
  std::vector<double> values(table.counts.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = std::log1p(static_cast<double>(table.counts[i]));
  return Tensor({table.n, kOrbits}, std::move(values));
}

Tensor center_columns(const Tensor& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x.at(u, j);
  for (double& m : mean) m /= n ? static_cast<double>(n) : 1.0;
  std::vector<double> values(n * d);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t j = 0; j < d; ++j) values[u * d + j] = x.at(u, j) - mean[j];
  return Tensor({n, d}, std::move(values));
}

double graphlet_similarity(std::size_t u, std::size_t v, const GdvTable& table) {
  if (u >= table.n || v >= table.n) {
    throw StateError("no graphlet vector for node " + std::to_string(std::max(u, v)));
  }
  std::array<double, kOrbits> a{}, b{};
  for (std::size_t o = 0; o < kOrbits; ++o) {
    a[o] = std::log1p(static_cast<double>(table.at(u, o)));
    b[o] = std::log1p(static_cast<double>(table.at(v, o)));
  }
  return similarity(a, b);
}

Tensor guarded_forward(Tape& tape, const Model& model, const SparseGraph& graph,
                       const Guard& guard, GuardPass* pass) {
  ForwardOptions options;
  options.guard = &guard;
  options.pass = pass;
  return model.forward(tape, graph, options);
}

void export_trace(const std::vector<LayerTrace>& traces, const SparseGraph& graph,
                  const fs::path& dir) {
  fs::create_directories(dir);
  const Csr& p = graph.csr();
  for (const auto& t : traces) {
    if (t.alpha.size() != p.nnz()) throw ShapeError("trace does not match the graph");
    std::ofstream out(dir / ("layer" + std::to_string(t.layer) + ".csv"));
    out.precision(17);
    out << "u,v,s,alpha,score,pruned,omega\n";
    for (std::size_t u = 0; u < p.n_rows; ++u) {
      for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
        out << u << ',' << p.col[e] << ',' << t.similarity[e] << ',' << t.alpha[e] << ','
            << t.score[e] << ',' << (t.kept[e] ? 0 : 1) << ',' << t.omega[e] << '\n';
      }
    }
  }
}

}  // namespace guardnet
