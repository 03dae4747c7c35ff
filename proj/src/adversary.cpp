#include "guardnet/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "guardnet/guard.hpp"

namespace guardnet {

Surrogate::Surrogate(const Model& model) {
  const ModelConfig& c = model.config();
  if (c.kind != ModelKind::gcn || c.layers != 2) {
    throw PreconditionError("surrogate must be a 2-layer GCN");
  }
  in_ = c.in_dim;
  hidden_ = c.hidden_dim;
  classes_ = c.num_classes;
  for (const auto& p : model.parameters()) {
    std::vector<double> values(p.tensor.data().begin(), p.tensor.data().end());
    if (p.name == "layer0.weight") w0_ = std::move(values);
    if (p.name == "layer0.bias") b0_ = std::move(values);
    if (p.name == "layer1.weight") w1_ = std::move(values);
    if (p.name == "layer1.bias") b1_ = std::move(values);
  }
}

Surrogate Surrogate::fit(const SparseGraph& graph, std::uint64_t seed,
                         const TrainConfig& train_config) {
  ModelConfig mc;
  mc.kind = ModelKind::gcn;
  mc.in_dim = graph.feature_dim();
  mc.num_classes = graph.num_classes();
  mc.seed = seed;
  Model model(mc);
  TrainConfig tc = train_config;
  tc.seed = seed;
  train(model, graph, tc);
  return Surrogate(model);
}

namespace {

// Mutable adjacency plus the cached first-layer products X W0.
class Engine {
 public:
  Engine(const SparseGraph& g, const Surrogate& s)
      : s_(s), n_(g.n_nodes()), h_(s.hidden_dim()), c_(s.num_classes()), adj_(g.n_nodes()) {
    if (!g.has_features()) throw PreconditionError("attacks need node features");
    for (std::size_t u = 0; u < n_; ++u) {
      const auto nb = g.neighbors(u);
      adj_[u].assign(nb.begin(), nb.end());
    }
    const Tensor& x = g.features();
    const std::size_t d = x.cols();
    if (s.w0().size() != d * h_) throw ShapeError("surrogate input width differs from features");
    xw_.assign(n_ * h_, 0.0);
    for (std::size_t u = 0; u < n_; ++u)
      for (std::size_t k = 0; k < d; ++k) {
        const double xv = x.at(u, k);
        if (xv == 0.0) continue;
        for (std::size_t j = 0; j < h_; ++j) xw_[u * h_ + j] += xv * s.w0()[k * h_ + j];
      }
  }

  std::size_t n() const { return n_; }
  std::size_t classes() const { return c_; }
  const std::vector<std::size_t>& neighbors(std::size_t u) const { return adj_[u]; }
  std::size_t degree(std::size_t u) const { return adj_[u].size(); }
  bool adjacent(std::size_t a, std::size_t b) const {
    return std::binary_search(adj_[a].begin(), adj_[a].end(), b);
  }

  void flip(std::size_t a, std::size_t b) {
    toggle(adj_[a], b);
    toggle(adj_[b], a);
  }

  double norm(std::size_t a, std::size_t b) const {
    return 1.0 / std::sqrt(static_cast<double>((adj_[a].size() + 1) * (adj_[b].size() + 1)));
  }

  /// relu(hidden pre-activation of v) times W1, written to out[c_].
  void projected_hidden(std::size_t v, double* out) const {
    std::vector<double>& hid = scratch_;
    hid.assign(s_.b0().begin(), s_.b0().end());
    const auto add = [&](std::size_t w) {
      const double a = norm(v, w);
      const double* row = &xw_[w * h_];
      for (std::size_t j = 0; j < h_; ++j) hid[j] += a * row[j];
    };
    add(v);
    for (std::size_t w : adj_[v]) add(w);
    for (std::size_t k = 0; k < c_; ++k) out[k] = 0.0;
    for (std::size_t j = 0; j < h_; ++j) {
      if (hid[j] <= 0.0) continue;
      for (std::size_t k = 0; k < c_; ++k) out[k] += hid[j] * s_.w1()[j * c_ + k];
    }
  }

  /// Logits of u computed from scratch on the current adjacency.
  std::vector<double> node_logits(std::size_t u) const {
    std::vector<double> z(s_.b1().begin(), s_.b1().end()), p(c_);
    const auto add = [&](std::size_t v) {
      projected_hidden(v, p.data());
      const double a = norm(u, v);
      for (std::size_t k = 0; k < c_; ++k) z[k] += a * p[k];
    };
    add(u);
    for (std::size_t v : adj_[u]) add(v);
    return z;
  }

  const Surrogate& surrogate() const { return s_; }

 private:
  static void toggle(std::vector<std::size_t>& row, std::size_t x) {
    auto it = std::lower_bound(row.begin(), row.end(), x);
    if (it != row.end() && *it == x) row.erase(it);
    else row.insert(it, x);
  }

  const Surrogate& s_;
  std::size_t n_, h_, c_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> xw_;
  mutable std::vector<double> scratch_;
};

double cross_entropy(std::span<const double> z, std::size_t label) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s) - z[label];
}

std::vector<double> feature_cosines(const SparseGraph& g, std::size_t u) {
  const Tensor& x = g.features();
  const std::size_t d = x.cols();
  std::vector<double> out(g.n_nodes());
  for (std::size_t v = 0; v < g.n_nodes(); ++v)
    out[v] = similarity(x.data().subspan(u * d, d), x.data().subspan(v * d, d));
  return out;
}

struct Candidate {
  Edge pair;  // (attacker, other)
  bool insertion = true;
};

/// Greedy flips of the candidates, each maximizing the target's loss.
void greedy_targeted(Engine& engine, std::size_t target, std::size_t label,
                     std::vector<Candidate> candidates, std::size_t budget, Perturbation& pert,
                     std::set<Edge>& flipped) {
  for (std::size_t step = 0; step < budget && !candidates.empty(); ++step) {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto [a, b] = candidates[i].pair;
      engine.flip(a, b);
      const auto z = engine.node_logits(target);
      engine.flip(a, b);
      const double score = cross_entropy(z, label);
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    const Candidate chosen = candidates[best];
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best));
    const Edge e = normalized(chosen.pair.first, chosen.pair.second);
    engine.flip(e.first, e.second);
    flipped.insert(e);
    (chosen.insertion ? pert.insertions : pert.deletions).push_back(e);
    pert.log.push_back({e, chosen.insertion, best_score, best_score});
  }
}

/// Insertions from attacker to the pool of different-label nodes least similar
/// to the target, plus deletions of attacker's same-label neighbors.
std::vector<Candidate> targeted_candidates(const SparseGraph& g, const Engine& engine,
                                           std::size_t attacker, std::size_t target,
                                           std::span<const double> cosines, std::size_t pool,
                                           const std::set<Edge>& flipped) {
  const std::size_t label = g.label(target);
  std::vector<std::size_t> others;
  for (std::size_t x = 0; x < g.n_nodes(); ++x) {
    if (x == attacker || x == target || g.label(x) == label) continue;
    if (engine.adjacent(attacker, x) || flipped.count(normalized(attacker, x))) continue;
    others.push_back(x);
  }
  const std::size_t keep = std::min(pool, others.size());
  std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(keep),
                    others.end(), [&](std::size_t a, std::size_t b) {
                      return cosines[a] != cosines[b] ? cosines[a] < cosines[b] : a < b;
                    });
  others.resize(keep);
  std::sort(others.begin(), others.end());
  std::vector<Candidate> out;
  for (std::size_t x : others) out.push_back({{attacker, x}, true});
  for (std::size_t w : engine.neighbors(attacker)) {
    if (w == target || g.label(w) != label || flipped.count(normalized(attacker, w))) continue;
    out.push_back({{attacker, w}, false});
  }
  return out;
}

}  // namespace

std::vector<double> Surrogate::logits(const SparseGraph& graph) const {
  Engine engine(graph, *this);
  std::vector<double> out;
  out.reserve(graph.n_nodes() * classes_);
  for (std::size_t u = 0; u < graph.n_nodes(); ++u) {
    const auto z = engine.node_logits(u);
    out.insert(out.end(), z.begin(), z.end());
  }
  return out;
}

Perturbation attack_direct(const SparseGraph& graph, std::size_t target,
                           const Surrogate& surrogate, const AttackConfig& config) {
  if (target >= graph.n_nodes()) throw AttackError("target out of range");
  if (!graph.has_labels()) throw PreconditionError("attacks need labels");
  const std::size_t budget = graph.degree(target);
  if (budget == 0) {
    throw AttackError("target " + std::to_string(target) + " is isolated; budget is 0");
  }
  Engine engine(graph, surrogate);
  Perturbation pert;
  pert.kind = AttackKind::direct;
  pert.budget = budget;
  pert.targets = {target};
  pert.attackers = {target};
  pert.seed = config.seed;
  std::set<Edge> flipped;
  const auto cosines = feature_cosines(graph, target);
  auto candidates =
      targeted_candidates(graph, engine, target, target, cosines, config.pool_size, flipped);
  greedy_targeted(engine, target, graph.label(target), std::move(candidates), budget, pert,
                  flipped);
  return pert;
}

Perturbation attack_influence(const SparseGraph& graph, std::size_t target,
                              const Surrogate& surrogate, const AttackConfig& config) {
  if (target >= graph.n_nodes()) throw AttackError("target out of range");
  if (!graph.has_labels()) throw PreconditionError("attacks need labels");
  if (graph.degree(target) == 0) {
    throw AttackError("target " + std::to_string(target) + " has no neighbors to attack through");
  }
  std::vector<std::size_t> attackers(graph.neighbors(target).begin(),
                                     graph.neighbors(target).end());
  std::stable_sort(attackers.begin(), attackers.end(), [&](std::size_t a, std::size_t b) {
    return graph.degree(a) > graph.degree(b);
  });
  attackers.resize(std::min(config.influence_neighbors, attackers.size()));

  Engine engine(graph, surrogate);
  Perturbation pert;
  pert.kind = AttackKind::influence;
  pert.targets = {target};
  pert.attackers = attackers;
  pert.seed = config.seed;
  for (std::size_t v : attackers) pert.budget += graph.degree(v);

  std::set<Edge> flipped;
  const auto cosines = feature_cosines(graph, target);
  for (std::size_t v : attackers) {
    auto candidates =
        targeted_candidates(graph, engine, v, target, cosines, config.pool_size, flipped);
    greedy_targeted(engine, target, graph.label(target), std::move(candidates), graph.degree(v),
                    pert, flipped);
  }
  return pert;
}

Perturbation attack_nontargeted(const SparseGraph& graph, const Surrogate& surrogate,
                                const AttackConfig& config) {
  if (!(config.rate > 0.0 && config.rate <= 0.25)) {
    throw ValidationError("perturbation rate must lie in (0, 0.25], got " +
                          std::to_string(config.rate));
  }
  if (!graph.has_masks() || !graph.has_labels()) {
    throw PreconditionError("non-targeted attack needs labels and masks");
  }
  if (config.batch == 0) throw ValidationError("batch size must be positive");
  const std::size_t n = graph.n_nodes();
  const Masks& masks = graph.masks();
  Engine engine(graph, surrogate);
  const std::size_t c = engine.classes();

  Perturbation pert;
  pert.kind = AttackKind::non_targeted;
  pert.budget = static_cast<std::size_t>(std::floor(config.rate * static_cast<double>(graph.n_edges())));
  pert.seed = config.seed;
  std::vector<std::size_t> test_nodes;
  for (std::size_t u = 0; u < n; ++u)
    if (masks.test[u]) test_nodes.push_back(u);
  pert.targets = test_nodes;
  pert.attackers = test_nodes;
  if (test_nodes.empty()) throw PreconditionError("non-targeted attack needs test nodes");

  // Attacker labels: ground truth on train nodes, surrogate predictions elsewhere.
  std::vector<std::size_t> labels(n);
  std::vector<double> clean_margins;
  {
    const auto z = surrogate.logits(graph);
    for (std::size_t u = 0; u < n; ++u) {
      const auto row = std::span<const double>(z).subspan(u * c, c);
      const auto top = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      labels[u] = masks.train[u] ? graph.label(u) : top;
      double second = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < c; ++k)
        if (k != labels[u]) second = std::max(second, row[k]);
      if (masks.test[u]) clean_margins.push_back(std::abs(row[labels[u]] - second));
    }
  }
  // Logits are sharpened so that the median test margin maps to 2 and the
  // cross entropy is capped a little above chance level: gains concentrate
  // on nodes near the boundary and stop once a node is misclassified.
  std::nth_element(clean_margins.begin(),
                   clean_margins.begin() + static_cast<std::ptrdiff_t>(clean_margins.size() / 2),
                   clean_margins.end());
  const double median = clean_margins[clean_margins.size() / 2];
  const double cap = std::log(static_cast<double>(c)) + 1.0;
  const double sharpen = median > 0.0 ? 2.0 / median : 1.0;
  std::vector<double> scaled(c);
  const auto node_loss = [&](std::span<const double> z, std::size_t label) {
    for (std::size_t k = 0; k < c; ++k) scaled[k] = sharpen * z[k];
    return std::min(cross_entropy(scaled, label), cap);
  };
  std::vector<double> proj(n * c), logits(n * c), loss(n), margin(n);
  std::vector<std::size_t> runner_up(n);
  const auto refresh = [&] {
    for (std::size_t v = 0; v < n; ++v) engine.projected_hidden(v, &proj[v * c]);
    for (std::size_t z = 0; z < n; ++z) {
      double* out = &logits[z * c];
      std::copy(surrogate.b1().begin(), surrogate.b1().end(), out);
      const auto add = [&](std::size_t v) {
        const double a = engine.norm(z, v);
        for (std::size_t k = 0; k < c; ++k) out[k] += a * proj[v * c + k];
      };
      add(z);
      for (std::size_t v : engine.neighbors(z)) add(v);
      loss[z] = node_loss(std::span<const double>(out, c), labels[z]);
      double best_other = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < c; ++k)
        if (k != labels[z] && out[k] > best_other) {
          best_other = out[k];
          runner_up[z] = k;
        }
      margin[z] = out[labels[z]] - best_other;
    }
  };

  std::vector<std::size_t> stamp_h(n, 0), slot_h(n, 0), stamp_z(n, 0);
  std::size_t epoch = 0;
  std::vector<double> new_proj, z_buf(c);
  std::vector<std::size_t> touched_h, touched_z;
  // Total loss change from flipping (a, b), recomputing only reachable rows.
  const auto score_flip = [&](std::size_t a, std::size_t b) {
    engine.flip(a, b);
    ++epoch;
    touched_h.clear();
    touched_z.clear();
    const auto mark_h = [&](std::size_t v) {
      if (stamp_h[v] == epoch) return;
      stamp_h[v] = epoch;
      slot_h[v] = touched_h.size();
      touched_h.push_back(v);
    };
    for (std::size_t x : {a, b}) {
      mark_h(x);
      for (std::size_t v : engine.neighbors(x)) mark_h(v);
    }
    new_proj.resize(touched_h.size() * c);
    for (std::size_t i = 0; i < touched_h.size(); ++i)
      engine.projected_hidden(touched_h[i], &new_proj[i * c]);
    const auto mark_z = [&](std::size_t z) {
      if (stamp_z[z] == epoch) return;
      stamp_z[z] = epoch;
      touched_z.push_back(z);
    };
    for (std::size_t v : touched_h) {
      mark_z(v);
      for (std::size_t z : engine.neighbors(v)) mark_z(z);
    }
    double delta = 0.0;
    for (std::size_t z : touched_z) {
      std::copy(surrogate.b1().begin(), surrogate.b1().end(), z_buf.begin());
      const auto add = [&](std::size_t v) {
        const double w = engine.norm(z, v);
        const double* p = stamp_h[v] == epoch ? &new_proj[slot_h[v] * c] : &proj[v * c];
        for (std::size_t k = 0; k < c; ++k) z_buf[k] += w * p[k];
      };
      add(z);
      for (std::size_t v : engine.neighbors(z)) add(v);
      delta += node_loss(z_buf, labels[z]) - loss[z];
    }
    engine.flip(a, b);
    return delta / static_cast<double>(n);
  };

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick_test(0, test_nodes.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_any(0, n - 1);
  std::set<Edge> flipped;
  std::vector<std::vector<std::size_t>> by_label(c);
  for (std::size_t u = 0; u < n; ++u) by_label[labels[u]].push_back(u);
  refresh();

  while (pert.size() < pert.budget) {
    struct Scored {
      Edge e;
      bool insertion;
      double score;
    };
    std::vector<Scored> batch;
    std::set<Edge> seen;
    // Half of the candidates sit at test nodes the surrogate still gets right
    // with the smallest margins; insertions there go to the runner-up class.
    std::vector<std::size_t> focus;
    for (std::size_t u : test_nodes)
      if (margin[u] > 0.0) focus.push_back(u);
    std::sort(focus.begin(), focus.end(), [&](std::size_t x, std::size_t y) {
      return margin[x] != margin[y] ? margin[x] < margin[y] : x < y;
    });
    focus.resize(std::min(focus.size(), std::max<std::size_t>(config.batch, focus.size() / 4)));
    const auto pick_endpoint = [&](std::size_t i) {
      if (i % 2 == 1 && !focus.empty())
        return focus[std::uniform_int_distribution<std::size_t>(0, focus.size() - 1)(rng)];
      return test_nodes[pick_test(rng)];
    };
    for (std::size_t tries = 0, found = 0; found < config.samples && tries < config.samples * 20;
         ++tries) {
      const std::size_t a = pick_endpoint(tries);
      std::size_t b = pick_any(rng);
      if (tries % 2 == 1 && !focus.empty()) {
        const auto& members = by_label[runner_up[a]];
        b = members[std::uniform_int_distribution<std::size_t>(0, members.size() - 1)(rng)];
      }
      if (a == b || labels[a] == labels[b] || engine.adjacent(a, b)) continue;
      const Edge e = normalized(a, b);
      if (flipped.count(e) || !seen.insert(e).second) continue;
      batch.push_back({e, true, 0.0});
      ++found;
    }
    for (std::size_t tries = 0, found = 0; found < config.samples && tries < config.samples * 20;
         ++tries) {
      const std::size_t a = pick_endpoint(tries);
      const auto& nb = engine.neighbors(a);
      if (nb.size() < 2) continue;
      const std::size_t b = nb[std::uniform_int_distribution<std::size_t>(0, nb.size() - 1)(rng)];
      if (labels[a] != labels[b] || engine.degree(b) < 2) continue;
      const Edge e = normalized(a, b);
      if (flipped.count(e) || !seen.insert(e).second) continue;
      batch.push_back({e, false, 0.0});
      ++found;
    }
    if (batch.empty()) break;
    for (auto& s : batch) s.score = score_flip(s.e.first, s.e.second);
    std::stable_sort(batch.begin(), batch.end(),
                     [](const Scored& x, const Scored& y) { return x.score > y.score; });

    std::size_t applied = 0;
    for (std::size_t i = 0; i < batch.size() && applied < config.batch && pert.size() < pert.budget;
         ++i) {
      const auto& s = batch[i];
      const auto [a, b] = s.e;
      if (!s.insertion && (engine.degree(a) < 2 || engine.degree(b) < 2)) continue;
      engine.flip(a, b);
      flipped.insert(s.e);
      (s.insertion ? pert.insertions : pert.deletions).push_back(s.e);
      // Batch is sorted, so the best remaining candidate is the chosen one.
      pert.log.push_back({s.e, s.insertion, s.score, s.score});
      ++applied;
    }
    if (applied == 0) break;
    refresh();
  }
  return pert;
}

double classification_margin(const Tensor& logits, std::size_t u, std::size_t label) {
  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < logits.cols(); ++k)
    if (k != label) best_other = std::max(best_other, logits.at(u, k));
  return logits.at(u, label) - best_other;
}

std::vector<std::size_t> select_targets(const SparseGraph& graph, const Model& model,
                                        std::size_t n, std::uint64_t seed,
                                        std::size_t min_degree) {
  if (!graph.has_masks()) throw PreconditionError("target selection needs a test mask");
  const Tensor logits = predict(model, graph);
  std::vector<std::pair<double, std::size_t>> eligible;
  for (std::size_t u = 0; u < graph.n_nodes(); ++u) {
    if (!graph.masks().test[u] || graph.degree(u) < min_degree) continue;
    if (argmax_row(logits, u) != graph.label(u)) continue;
    eligible.emplace_back(classification_margin(logits, u, graph.label(u)), u);
  }
  if (eligible.size() < n) {
    throw SelectionError("need " + std::to_string(n) + " correctly classified test nodes, found " +
                             std::to_string(eligible.size()),
                         eligible.size());
  }
  std::sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  const std::size_t quarter = n / 4;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < quarter; ++i) out.push_back(eligible[i].second);
  std::vector<std::size_t> middle;
  for (std::size_t i = quarter; i < eligible.size() - quarter; ++i)
    middle.push_back(eligible[i].second);
  std::mt19937_64 rng(seed);
  std::shuffle(middle.begin(), middle.end(), rng);
  middle.resize(n - 2 * quarter);
  out.insert(out.end(), middle.begin(), middle.end());
  for (std::size_t i = eligible.size() - quarter; i < eligible.size(); ++i)
    out.push_back(eligible[i].second);
  return out;
}

}  // namespace guardnet
