#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "guardnet/ops.hpp"
#include "guardnet/tensor.hpp"

namespace guardnet {

using Edge = std::pair<std::size_t, std::size_t>;

struct Masks {
  Mask train;
  Mask val;
  Mask test;
};

/// Immutable undirected graph. Both directions of each edge are stored in a
/// sorted CSR pattern; self loops are never stored.
class SparseGraph {
 public:
  SparseGraph() = default;

  /// Builds a graph from an undirected edge list. Duplicates (in either
  /// orientation) collapse, self loops are dropped and counted.
  static SparseGraph from_edges(std::size_t n_nodes, std::span<const Edge> edges,
                                std::optional<Tensor> features = std::nullopt,
                                std::vector<std::size_t> labels = {},
                                std::size_t num_classes = 0);

  std::size_t n_nodes() const { return csr_.n_rows; }
  /// Undirected edge count.
  std::size_t n_edges() const { return csr_.nnz() / 2; }
  const Csr& csr() const { return csr_; }
  std::span<const std::size_t> reverse() const { return reverse_; }
  std::size_t degree(std::size_t u) const { return csr_.row_ptr[u + 1] - csr_.row_ptr[u]; }
  std::span<const std::size_t> neighbors(std::size_t u) const;
  bool has_edge(std::size_t u, std::size_t v) const;
  /// Sorted (u < v) undirected edges.
  std::vector<Edge> edge_list() const;

  bool has_features() const { return features_.has_value(); }
  const Tensor& features() const;
  std::size_t feature_dim() const { return features_ ? features_->cols() : 0; }

  bool has_labels() const { return !labels_.empty(); }
  std::span<const std::size_t> labels() const { return labels_; }
  std::size_t label(std::size_t u) const { return labels_.at(u); }
  std::size_t num_classes() const { return num_classes_; }

  bool has_masks() const { return masks_.has_value(); }
  const Masks& masks() const;

  std::size_t dropped_self_loops() const { return dropped_self_loops_; }

  SparseGraph with_masks(Masks masks) const;
  SparseGraph with_features(Tensor features) const;

  /// Throws StateError when symmetry, ordering or self-loop freedom is broken.
  void check_invariants() const;

 private:
  Csr csr_;
  std::vector<std::size_t> reverse_;
  std::optional<Tensor> features_;
  std::vector<std::size_t> labels_;
  std::size_t num_classes_ = 0;
  std::optional<Masks> masks_;
  std::size_t dropped_self_loops_ = 0;
};

/// Reads "u v" edge lines, an optional headerless CSV feature matrix and an
/// optional one-label-per-line file. Node count comes from the labels or
/// feature rows when present, otherwise from the largest index.
SparseGraph load_edge_list(const std::filesystem::path& edges_path,
                           const std::optional<std::filesystem::path>& features_path,
                           const std::optional<std::filesystem::path>& labels_path,
                           std::size_t num_classes = 0);

struct SplitSpec {
  double train = 0.1;
  double val = 0.1;
  double test = 0.8;
  std::uint64_t seed = 0;
};

/// Class-stratified random split with exact total sizes round(fraction * n).
SparseGraph split(const SparseGraph& graph, const SplitSpec& spec);

/// Writes train.txt, val.txt and test.txt (one node index per line).
void export_masks(const Masks& masks, const std::filesystem::path& dir);
Masks import_masks(const std::filesystem::path& dir, std::size_t n_nodes);

/// Removes every edge whose endpoint features have Jaccard similarity below
/// threshold. Features must be binary.
SparseGraph jaccard_preprocess(const SparseGraph& graph, double threshold);

/// Jaccard index of two binary rows; 0 when both are empty.
double jaccard(std::span<const double> a, std::span<const double> b);

std::size_t count_in_mask(const Mask& mask);

}  // namespace guardnet
