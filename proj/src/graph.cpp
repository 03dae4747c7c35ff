#include "guardnet/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "guardnet/graph_ops.hpp"
#include "guardnet/perturbation.hpp"

namespace guardnet {

namespace fs = std::filesystem;

SparseGraph SparseGraph::from_edges(std::size_t n_nodes, std::span<const Edge> edges,
                                    std::optional<Tensor> features,
                                    std::vector<std::size_t> labels,
                                    std::size_t num_classes) {
  SparseGraph g;
  std::vector<std::vector<std::size_t>> adj(n_nodes);
  for (const auto& [u, v] : edges) {
    if (u >= n_nodes || v >= n_nodes) {
      throw ValidationError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") references a node >= " + std::to_string(n_nodes));
    }
    if (u == v) {
      ++g.dropped_self_loops_;
      continue;
    }
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  g.csr_.n_rows = g.csr_.n_cols = n_nodes;
  g.csr_.row_ptr.assign(n_nodes + 1, 0);
  for (std::size_t u = 0; u < n_nodes; ++u) {
    auto& row = adj[u];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    g.csr_.row_ptr[u + 1] = g.csr_.row_ptr[u] + row.size();
  }
  g.csr_.col.reserve(g.csr_.row_ptr[n_nodes]);
  for (const auto& row : adj) g.csr_.col.insert(g.csr_.col.end(), row.begin(), row.end());
  g.reverse_ = reverse_index(g.csr_);

  if (features) {
    if (features->rank() != 2 || features->rows() != n_nodes) {
      throw ShapeError("features " + shape_string(features->shape()) + " do not have " +
                       std::to_string(n_nodes) + " rows");
    }
    g.features_ = std::move(features);
  }
  if (!labels.empty()) {
    if (labels.size() != n_nodes) {
      throw ValidationError("expected " + std::to_string(n_nodes) + " labels, got " +
                            std::to_string(labels.size()));
    }
    const std::size_t max_label = *std::max_element(labels.begin(), labels.end());
    if (num_classes == 0) num_classes = max_label + 1;
    if (max_label >= num_classes) {
      throw ValidationError("label " + std::to_string(max_label) + " >= class count " +
                            std::to_string(num_classes));
    }
    g.labels_ = std::move(labels);
    g.num_classes_ = num_classes;
  }
  return g;
}

std::span<const std::size_t> SparseGraph::neighbors(std::size_t u) const {
  return std::span<const std::size_t>(csr_.col).subspan(csr_.row_ptr[u], degree(u));
}

bool SparseGraph::has_edge(std::size_t u, std::size_t v) const {
  if (u >= n_nodes() || v >= n_nodes()) return false;
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> SparseGraph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(n_edges());
  for (std::size_t u = 0; u < n_nodes(); ++u)
    for (std::size_t v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

const Tensor& SparseGraph::features() const {
  if (!features_) throw StateError("graph has no node features");
  return *features_;
}

const Masks& SparseGraph::masks() const {
  if (!masks_) throw StateError("graph has no train/val/test masks");
  return *masks_;
}

SparseGraph SparseGraph::with_masks(Masks masks) const {
  const std::size_t n = n_nodes();
  if (masks.train.size() != n || masks.val.size() != n || masks.test.size() != n) {
    throw ShapeError("masks must have one entry per node");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if ((masks.train[i] != 0) + (masks.val[i] != 0) + (masks.test[i] != 0) > 1) {
      throw ValidationError("masks overlap at node " + std::to_string(i));
    }
  }
  SparseGraph g = *this;
  g.masks_ = std::move(masks);
  return g;
}

SparseGraph SparseGraph::with_features(Tensor features) const {
  if (features.rank() != 2 || features.rows() != n_nodes()) {
    throw ShapeError("features " + shape_string(features.shape()) + " do not have " +
                     std::to_string(n_nodes()) + " rows");
  }
  SparseGraph g = *this;
  g.features_ = std::move(features);
  return g;
}

void SparseGraph::check_invariants() const {
  const std::size_t n = n_nodes();
  for (std::size_t u = 0; u < n; ++u) {
    const auto nb = neighbors(u);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if (nb[i] == u) throw StateError("self loop stored at node " + std::to_string(u));
      if (i > 0 && nb[i - 1] >= nb[i]) {
        throw StateError("neighbors of " + std::to_string(u) + " not strictly ascending");
      }
      if (!has_edge(nb[i], u)) {
        throw StateError("missing reverse of (" + std::to_string(u) + "," +
                         std::to_string(nb[i]) + ")");
      }
    }
  }
  std::size_t degree_sum = 0;
  for (std::size_t u = 0; u < n; ++u) degree_sum += degree(u);
  if (degree_sum != 2 * n_edges()) throw StateError("degree sum differs from 2|E|");
}

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string where(const fs::path& path, std::size_t line) {
  return path.filename().string() + ":" + std::to_string(line + 1);
}

}  // namespace

SparseGraph load_edge_list(const fs::path& edges_path,
                           const std::optional<fs::path>& features_path,
                           const std::optional<fs::path>& labels_path,
                           std::size_t num_classes) {
  std::vector<std::size_t> labels;
  if (labels_path) {
    const auto lines = read_lines(*labels_path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (blank(lines[i])) continue;
      std::istringstream is(lines[i]);
      long long value = -1;
      std::string rest;
      if (!(is >> value) || (is >> rest) || value < 0) {
        throw ValidationError(where(*labels_path, i) + ": expected a nonnegative class index");
      }
      if (num_classes != 0 && static_cast<std::size_t>(value) >= num_classes) {
        throw ValidationError(where(*labels_path, i) + ": label " + std::to_string(value) +
                              " >= class count " + std::to_string(num_classes));
      }
      labels.push_back(static_cast<std::size_t>(value));
    }
  }

  std::optional<Tensor> features;
  if (features_path) {
    const auto lines = read_lines(*features_path);
    std::vector<double> values;
    std::size_t width = 0, rows = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (blank(lines[i])) continue;
      std::stringstream ss(lines[i]);
      std::string cell;
      std::size_t count = 0;
      while (std::getline(ss, cell, ',')) {
        try {
          std::size_t used = 0;
          values.push_back(std::stod(cell, &used));
        } catch (const std::exception&) {
          throw ValidationError(where(*features_path, i) + ": non-numeric value '" + cell + "'");
        }
        ++count;
      }
      if (rows == 0) width = count;
      if (count != width || count == 0) {
        throw ValidationError(where(*features_path, i) + ": ragged row with " +
                              std::to_string(count) + " values, expected " +
                              std::to_string(width));
      }
      ++rows;
    }
    features = Tensor({rows, width}, std::move(values));
  }

  const auto lines = read_lines(edges_path);
  std::vector<Edge> edges;
  std::vector<std::size_t> edge_line;
  std::size_t max_index = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i]) || lines[i][lines[i].find_first_not_of(" \t")] == '#') continue;
    std::istringstream is(lines[i]);
    long long u = -1, v = -1;
    std::string rest;
    if (!(is >> u >> v) || (is >> rest) || u < 0 || v < 0) {
      throw ValidationError(where(edges_path, i) + ": expected 'u v' with nonnegative indices");
    }
    edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    edge_line.push_back(i);
    max_index = std::max({max_index, edges.back().first, edges.back().second});
  }

  std::size_t n = 0;
  if (!labels.empty()) n = labels.size();
  if (features) {
    if (n != 0 && features->rows() != n) {
      throw ValidationError("feature file has " + std::to_string(features->rows()) +
                            " rows but label file has " + std::to_string(n) + " labels");
    }
    n = features->rows();
  }
  if (n == 0) n = edges.empty() ? 0 : max_index + 1;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (edges[k].first >= n || edges[k].second >= n) {
      throw ValidationError(where(edges_path, edge_line[k]) + ": node index >= n = " +
                            std::to_string(n));
    }
  }
  SparseGraph g = SparseGraph::from_edges(n, edges, std::move(features), std::move(labels),
                                          num_classes);
  if (g.dropped_self_loops() > 0) {
    std::cerr << "warning: dropped " << g.dropped_self_loops() << " self loop(s) from "
              << edges_path.string() << "\n";
  }
  return g;
}

SparseGraph split(const SparseGraph& graph, const SplitSpec& spec) {
  if (!(spec.train > 0.0) || !(spec.val > 0.0) || !(spec.test > 0.0) ||
      spec.train + spec.val + spec.test > 1.0 + 1e-12) {
    throw ValidationError("split fractions must be positive and sum to at most 1");
  }
  if (!graph.has_labels()) throw PreconditionError("split needs node labels");
  const std::size_t n = graph.n_nodes();

  // Nodes grouped by class, shuffled within each class.
  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t c = 0; c < graph.num_classes(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t u = 0; u < n; ++u)
      if (graph.label(u) == c) members.push_back(u);
    std::shuffle(members.begin(), members.end(), rng);
    order.insert(order.end(), members.begin(), members.end());
  }

  // Sequential largest-deficit apportionment along the class-grouped order:
  // exact totals, and each class receives its proportional share within one.
  const auto rounded = [n](double f) {
    return static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
  };
  std::array<std::size_t, 4> target{rounded(spec.train), rounded(spec.val), rounded(spec.test), 0};
  while (target[0] + target[1] + target[2] > n) --target[2];
  target[3] = n - target[0] - target[1] - target[2];
  std::array<std::size_t, 4> assigned{0, 0, 0, 0};
  Masks masks{Mask(n, 0), Mask(n, 0), Mask(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_deficit = -1e300;
    for (std::size_t k = 0; k < 4; ++k) {
      const double deficit = static_cast<double>(target[k]) * static_cast<double>(i + 1) /
                                 static_cast<double>(n) -
                             static_cast<double>(assigned[k]);
      if (deficit > best_deficit + 1e-12) {
        best_deficit = deficit;
        best = k;
      }
    }
    ++assigned[best];
    const std::size_t u = order[i];
    if (best == 0) masks.train[u] = 1;
    if (best == 1) masks.val[u] = 1;
    if (best == 2) masks.test[u] = 1;
  }

  std::vector<std::size_t> train_per_class(graph.num_classes(), 0);
  for (std::size_t u = 0; u < n; ++u)
    if (masks.train[u]) ++train_per_class[graph.label(u)];
  for (std::size_t c = 0; c < graph.num_classes(); ++c) {
    if (train_per_class[c] == 0) {
      throw ValidationError("class " + std::to_string(c) + " has no training nodes");
    }
  }
  return graph.with_masks(std::move(masks));
}

void export_masks(const Masks& masks, const fs::path& dir) {
  fs::create_directories(dir);
  const std::pair<const char*, const Mask*> files[] = {
      {"train.txt", &masks.train}, {"val.txt", &masks.val}, {"test.txt", &masks.test}};
  for (const auto& [name, mask] : files) {
    std::ofstream out(dir / name);
    for (std::size_t i = 0; i < mask->size(); ++i)
      if ((*mask)[i]) out << i << '\n';
  }
}

Masks import_masks(const fs::path& dir, std::size_t n_nodes) {
  Masks masks{Mask(n_nodes, 0), Mask(n_nodes, 0), Mask(n_nodes, 0)};
  const std::pair<const char*, Mask*> files[] = {
      {"train.txt", &masks.train}, {"val.txt", &masks.val}, {"test.txt", &masks.test}};
  for (const auto& [name, mask] : files) {
    const auto lines = read_lines(dir / name);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (blank(lines[i])) continue;
      const std::size_t u = std::stoull(lines[i]);
      if (u >= n_nodes) throw ValidationError(where(dir / name, i) + ": node index out of range");
      (*mask)[u] = 1;
    }
  }
  return masks;
}

double jaccard(std::span<const double> a, std::span<const double> b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0.0, y = b[i] != 0.0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

SparseGraph jaccard_preprocess(const SparseGraph& graph, double threshold) {
  const Tensor& x = graph.features();
  for (double v : x.data()) {
    if (v != 0.0 && v != 1.0) {
      throw ValidationError(
          "jaccard_preprocess needs binary features; use the guard's cosine similarity for "
          "continuous features");
    }
  }
  const std::size_t d = x.cols();
  std::vector<Edge> kept;
  for (const auto& [u, v] : graph.edge_list()) {
    const auto xu = x.data().subspan(u * d, d);
    const auto xv = x.data().subspan(v * d, d);
    if (jaccard(xu, xv) >= threshold) kept.emplace_back(u, v);
  }
  SparseGraph out = SparseGraph::from_edges(graph.n_nodes(), kept, x,
                                            std::vector<std::size_t>(graph.labels().begin(),
                                                                     graph.labels().end()),
                                            graph.num_classes());
  return graph.has_masks() ? out.with_masks(graph.masks()) : out;
}

std::size_t count_in_mask(const Mask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(),
                                                [](std::uint8_t m) { return m != 0; }));
}

// ---------------------------------------------------------------------------
// Perturbations

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::direct: return "direct";
    case AttackKind::influence: return "influence";
    case AttackKind::non_targeted: return "non-targeted";
  }
  return "unknown";
}

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "direct") return AttackKind::direct;
  if (name == "influence") return AttackKind::influence;
  if (name == "non-targeted" || name == "nontargeted") return AttackKind::non_targeted;
  throw ValidationError("unknown attack kind '" + name + "'");
}

void check_perturbation(const Perturbation& pert) {
  if (pert.size() > pert.budget) {
    throw PreconditionError("perturbation has " + std::to_string(pert.size()) +
                            " modifications, budget is " + std::to_string(pert.budget));
  }
  std::set<Edge> ins(pert.insertions.begin(), pert.insertions.end());
  if (ins.size() != pert.insertions.size()) throw PreconditionError("duplicate insertion");
  std::set<Edge> del(pert.deletions.begin(), pert.deletions.end());
  if (del.size() != pert.deletions.size()) throw PreconditionError("duplicate deletion");
  for (const auto& e : del)
    if (ins.count(e)) throw PreconditionError("edge both inserted and deleted");
  if (!pert.attackers.empty()) {
    const std::set<std::size_t> attackers(pert.attackers.begin(), pert.attackers.end());
    auto touches = [&](const Edge& e) {
      return attackers.count(e.first) > 0 || attackers.count(e.second) > 0;
    };
    for (const auto* list : {&pert.insertions, &pert.deletions})
      for (const auto& e : *list)
        if (!touches(e)) {
          throw PreconditionError("modified edge (" + std::to_string(e.first) + "," +
                                  std::to_string(e.second) + ") touches no attacker node");
        }
  }
}

SparseGraph apply_perturbation(const SparseGraph& graph, const Perturbation& pert) {
  if (pert.size() > pert.budget) {
    throw PreconditionError("budget exceeded: " + std::to_string(pert.size()) + " > " +
                            std::to_string(pert.budget));
  }
  std::set<Edge> edges;
  for (const auto& e : graph.edge_list()) edges.insert(e);
  for (const auto& [a, b] : pert.insertions) {
    if (a == b || a >= graph.n_nodes() || b >= graph.n_nodes()) {
      throw PreconditionError("invalid insertion (" + std::to_string(a) + "," +
                              std::to_string(b) + ")");
    }
    if (!edges.insert(normalized(a, b)).second) {
      throw PreconditionError("insertion of existing edge (" + std::to_string(a) + "," +
                              std::to_string(b) + ")");
    }
  }
  for (const auto& [a, b] : pert.deletions) {
    if (edges.erase(normalized(a, b)) == 0) {
      throw PreconditionError("deletion of missing edge (" + std::to_string(a) + "," +
                              std::to_string(b) + ")");
    }
  }
  const std::vector<Edge> list(edges.begin(), edges.end());
  std::optional<Tensor> features;
  if (graph.has_features()) features = graph.features();
  SparseGraph out = SparseGraph::from_edges(
      graph.n_nodes(), list, features,
      std::vector<std::size_t>(graph.labels().begin(), graph.labels().end()),
      graph.num_classes());
  return graph.has_masks() ? out.with_masks(graph.masks()) : out;
}

void write_perturbation(const Perturbation& pert, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "budget " << pert.budget << '\n';
  out << "kind " << to_string(pert.kind) << '\n';
  out << "seed " << pert.seed << '\n';
  out << "targets";
  for (auto t : pert.targets) out << ' ' << t;
  out << "\nattackers";
  for (auto a : pert.attackers) out << ' ' << a;
  out << '\n';
  for (const auto& [u, v] : pert.insertions) out << "+ " << u << ' ' << v << '\n';
  for (const auto& [u, v] : pert.deletions) out << "- " << u << ' ' << v << '\n';
}

Perturbation read_perturbation(const fs::path& path) {
  Perturbation p;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (blank(line)) continue;
    // Accept the typographic minus (U+2212) as a deletion marker.
    if (line.rfind("\xE2\x88\x92", 0) == 0) line = "-" + line.substr(3);
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "+" || key == "-") {
      std::size_t u = 0, v = 0;
      if (!(is >> u >> v)) throw ValidationError(where(path, i) + ": expected '+/- u v'");
      (key == "+" ? p.insertions : p.deletions).push_back(normalized(u, v));
    } else if (key == "budget") {
      is >> p.budget;
    } else if (key == "kind") {
      std::string kind;
      is >> kind;
      p.kind = parse_attack_kind(kind);
    } else if (key == "seed") {
      is >> p.seed;
    } else if (key == "targets" || key == "attackers") {
      auto& list = key == "targets" ? p.targets : p.attackers;
      std::size_t x = 0;
      while (is >> x) list.push_back(x);
    } else {
      throw ValidationError(where(path, i) + ": unknown line '" + line + "'");
    }
  }
  return p;
}

}  // namespace guardnet
