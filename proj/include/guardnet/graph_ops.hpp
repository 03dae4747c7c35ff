#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "guardnet/ops.hpp"

namespace guardnet {

/// For a symmetric pattern, position of entry (v,u) for every stored (u,v).
std::vector<std::size_t> reverse_index(const Csr& pattern);

namespace ops {

// Ops below keep a reference to `pattern`; it must outlive backward().

/// out[u] = self_w[u] * h[u] + sum_e edge_w[e] * h[col[e]] over row u.
/// Differentiable in edge_w, self_w and h.
Tensor edge_aggregate(Tape& tape, const Csr& pattern, const Tensor& edge_w,
                      const Tensor& self_w, const Tensor& h);

/// Cosine similarity of the two endpoint rows of h for every stored entry.
/// Rows with zero norm give similarity 0 and no gradient.
Tensor edge_cosine(Tape& tape, const Csr& pattern, const Tensor& h);

struct Importance {
  Tensor edge;  // [nnz]
  Tensor self;  // [n], constant
  std::vector<std::size_t> support;  // per-row count of strictly positive inputs
};

/// Row-wise importance normalization over nonnegative edge scores:
/// edge = s / rowsum(s) * k/(k+1), self = 1/(k+1), k = #positive in row.
/// The counts are piecewise constant, so gradient flows through the ratio only.
Importance normalize_importance(Tape& tape, const Csr& pattern, const Tensor& scores);

/// [nnz x 2] matrix whose row e is [x[e], x[reverse[e]]].
Tensor edge_pairs(Tape& tape, std::span<const std::size_t> reverse, const Tensor& x);

}  // namespace ops
}  // namespace guardnet
