#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "guardnet/tensor.hpp"

namespace guardnet {

/// Node selection flags, one byte per node (nonzero = selected).
using Mask = std::vector<std::uint8_t>;

/// Compressed sparse row pattern. Row u owns col[row_ptr[u] .. row_ptr[u+1]).
struct Csr {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col;

  std::size_t nnz() const { return col.size(); }
};

/// Csr pattern with one value per stored entry.
struct SparseMatrix {
  Csr pattern;
  std::vector<double> values;

  static SparseMatrix identity(std::size_t n);
  static SparseMatrix empty(std::size_t n_rows, std::size_t n_cols);
};

namespace ops {

// Dense kernels. All of them record onto `tape` when it is recording and at
// least one input requires a gradient.

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

/// Equal shapes, or one operand with a single element (scalar broadcast).
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
/// a + shift, elementwise.
Tensor shift(Tape& tape, const Tensor& a, double offset);
Tensor relu(Tape& tape, const Tensor& a);
Tensor sigmoid(Tape& tape, const Tensor& a);
Tensor sum(Tape& tape, const Tensor& a);

/// a[n x d] + bias[d] on every row.
Tensor add_rowwise(Tape& tape, const Tensor& a, const Tensor& bias);

/// Inverted dropout: kept entries are scaled by 1/(1-rate).
Tensor dropout(Tape& tape, const Tensor& a, double rate, std::mt19937_64& rng);

/// Mean over masked rows of -log softmax(logits)[label].
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             std::span<const std::size_t> labels,
                             std::span<const std::uint8_t> mask);

/// out = adj * h. Gradient flows to h only.
Tensor spmm(Tape& tape, const SparseMatrix& adj, const Tensor& h);

}  // namespace ops

/// Scalar logistic function shared by kernels and pruning decisions.
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace guardnet
