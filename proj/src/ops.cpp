#include "guardnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ops_internal.hpp"

namespace guardnet {

SparseMatrix SparseMatrix::identity(std::size_t n) {
  SparseMatrix m;
  m.pattern.n_rows = n;
  m.pattern.n_cols = n;
  m.pattern.row_ptr.resize(n + 1);
  m.pattern.col.resize(n);
  for (std::size_t i = 0; i <= n; ++i) m.pattern.row_ptr[i] = i;
  for (std::size_t i = 0; i < n; ++i) m.pattern.col[i] = i;
  m.values.assign(n, 1.0);
  return m;
}

SparseMatrix SparseMatrix::empty(std::size_t n_rows, std::size_t n_cols) {
  SparseMatrix m;
  m.pattern.n_rows = n_rows;
  m.pattern.n_cols = n_cols;
  m.pattern.row_ptr.assign(n_rows + 1, 0);
  return m;
}

namespace ops {

using detail::TensorNode;
using internal::make_output;
using internal::tracks;

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  const bool grad = tracks(tape, {&a, &b});
  Tensor c = make_output({m, n}, std::move(out), grad);
  if (grad) {
    auto an = a.node(), bn = b.node(), cn = c.node();
    tape.record(c, [an, bn, cn, m, k, n] {
      const auto& G = cn->grad;
      if (an->requires_grad) {
        an->ensure_grad();
        // dA = dC * B^T
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * bn->data[p * n + j];
            an->grad[i * k + p] += acc;
          }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        // dB = A^T * dC
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = an->data[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) bn->grad[p * n + j] += aip * G[i * n + j];
          }
      }
    });
  }
  return c;
}

namespace {

enum class Broadcast { equal, left_scalar, right_scalar };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::equal;
  if (a.size() == 1) return Broadcast::left_scalar;
  if (b.size() == 1) return Broadcast::right_scalar;
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                   " and " + shape_string(b.shape()));
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind("add", a, b);
  const Tensor& big = kind == Broadcast::left_scalar ? b : a;
  std::vector<double> out(big.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = kind == Broadcast::left_scalar ? a[0] : a[i];
    const double y = kind == Broadcast::right_scalar ? b[0] : b[i];
    out[i] = x + y;
  }
  const bool grad = tracks(tape, {&a, &b});
  Tensor c = make_output(big.shape(), std::move(out), grad);
  if (grad) {
    auto an = a.node(), bn = b.node(), cn = c.node();
    tape.record(c, [an, bn, cn, kind] {
      const auto& G = cn->grad;
      for (auto* in : {an.get(), bn.get()}) {
        if (!in->requires_grad) continue;
        in->ensure_grad();
        const bool reduce = (in == an.get() && kind == Broadcast::left_scalar) ||
                            (in == bn.get() && kind == Broadcast::right_scalar);
        if (reduce) {
          double acc = 0.0;
          for (double g : G) acc += g;
          in->grad[0] += acc;
        } else {
          for (std::size_t i = 0; i < G.size(); ++i) in->grad[i] += G[i];
        }
      }
    });
  }
  return c;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind("mul", a, b);
  const Tensor& big = kind == Broadcast::left_scalar ? b : a;
  std::vector<double> out(big.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = kind == Broadcast::left_scalar ? a[0] : a[i];
    const double y = kind == Broadcast::right_scalar ? b[0] : b[i];
    out[i] = x * y;
  }
  const bool grad = tracks(tape, {&a, &b});
  Tensor c = make_output(big.shape(), std::move(out), grad);
  if (grad) {
    auto an = a.node(), bn = b.node(), cn = c.node();
    tape.record(c, [an, bn, cn, kind] {
      const auto& G = cn->grad;
      auto value = [](const TensorNode* t, bool scalar, std::size_t i) {
        return scalar ? t->data[0] : t->data[i];
      };
      const bool a_scalar = kind == Broadcast::left_scalar;
      const bool b_scalar = kind == Broadcast::right_scalar;
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < G.size(); ++i)
          an->grad[a_scalar ? 0 : i] += G[i] * value(bn.get(), b_scalar, i);
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < G.size(); ++i)
          bn->grad[b_scalar ? 0 : i] += G[i] * value(an.get(), a_scalar, i);
      }
    });
  }
  return c;
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& x : out) x *= factor;
  const bool grad = tracks(tape, {&a});
  Tensor c = make_output(a.shape(), std::move(out), grad);
  if (grad) {
    auto an = a.node(), cn = c.node();
    tape.record(c, [an, cn, factor] {
      an->ensure_grad();
      for (std::size_t i = 0; i < cn->grad.size(); ++i) an->grad[i] += factor * cn->grad[i];
    });
  }
  return c;
}

Tensor shift(Tape& tape, const Tensor& a, double offset) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& x : out) x += offset;
  const bool grad = tracks(tape, {&a});
  Tensor c = make_output(a.shape(), std::move(out), grad);
  if (grad) {
    auto an = a.node(), cn = c.node();
    tape.record(c, [an, cn] {
      an->ensure_grad();
      for (std::size_t i = 0; i < cn->grad.size(); ++i) an->grad[i] += cn->grad[i];
    });
  }
  return c;
}

Tensor relu(Tape& tape, const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] < 0.0 ? 0.0 : a[i];  // NaN passes through
  const bool grad = tracks(tape, {&a});
  Tensor c = make_output(a.shape(), std::move(out), grad);
  if (grad) {
    auto an = a.node(), cn = c.node();
    tape.record(c, [an, cn] {
      an->ensure_grad();
      for (std::size_t i = 0; i < cn->grad.size(); ++i)
        if (an->data[i] > 0.0) an->grad[i] += cn->grad[i];
    });
  }
  return c;
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = guardnet::sigmoid(a[i]);
  const bool grad = tracks(tape, {&a});
  Tensor c = make_output(a.shape(), std::move(out), grad);
  if (grad) {
    auto an = a.node(), cn = c.node();
    tape.record(c, [an, cn] {
      an->ensure_grad();
      for (std::size_t i = 0; i < cn->grad.size(); ++i) {
        const double s = cn->data[i];
        an->grad[i] += cn->grad[i] * s * (1.0 - s);
      }
    });
  }
  return c;
}

Tensor sum(Tape& tape, const Tensor& a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x;
  const bool grad = tracks(tape, {&a});
  Tensor c = make_output({1}, {acc}, grad);
  if (grad) {
    auto an = a.node(), cn = c.node();
    tape.record(c, [an, cn] {
      an->ensure_grad();
      for (double& g : an->grad) g += cn->grad[0];
    });
  }
  return c;
}

Tensor add_rowwise(Tape& tape, const Tensor& a, const Tensor& bias) {
  if (a.rank() != 2 || bias.size() != a.cols()) {
    throw ShapeError("add_rowwise: incompatible shapes " + shape_string(a.shape()) +
                     " and " + shape_string(bias.shape()));
  }
  const std::size_t n = a.rows(), d = a.cols();
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += bias[j];
  const bool grad = tracks(tape, {&a, &bias});
  Tensor c = make_output(a.shape(), std::move(out), grad);
  if (grad) {
    auto an = a.node(), bn = bias.node(), cn = c.node();
    tape.record(c, [an, bn, cn, n, d] {
      const auto& G = cn->grad;
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < G.size(); ++i) an->grad[i] += G[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) bn->grad[j] += G[i * d + j];
      }
    });
  }
  return c;
}

Tensor dropout(Tape& tape, const Tensor& a, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ValidationError("dropout rate must lie in [0, 1)");
  if (rate == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> mask(a.size());
  for (double& m : mask) m = unit(rng) < rate ? 0.0 : keep_scale;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * mask[i];
  const bool grad = tracks(tape, {&a});
  Tensor c = make_output(a.shape(), std::move(out), grad);
  if (grad) {
    auto an = a.node(), cn = c.node();
    tape.record(c, [an, cn, mask = std::move(mask)] {
      an->ensure_grad();
      for (std::size_t i = 0; i < mask.size(); ++i) an->grad[i] += cn->grad[i] * mask[i];
    });
  }
  return c;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             std::span<const std::size_t> labels,
                             std::span<const std::uint8_t> mask) {
  if (logits.rank() != 2) throw ShapeError("softmax_cross_entropy: logits must be a matrix");
  const std::size_t n = logits.rows(), classes = logits.cols();
  if (labels.size() != n || mask.size() != n) {
    throw ShapeError("softmax_cross_entropy: labels/mask length must equal " +
                     std::to_string(n) + " rows");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    if (labels[i] >= classes) {
      throw ValidationError("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                            " at row " + std::to_string(i) + " outside [0," +
                            std::to_string(classes) + ")");
    }
    ++count;
  }
  if (count == 0) throw PreconditionError("softmax_cross_entropy: mask selects no rows");

  // Softmax probabilities are kept for the backward rule.
  std::vector<double> probs(n * classes, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double* row = logits.data().data() + i * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
    const double log_z = std::log(z) + mx;
    for (std::size_t c = 0; c < classes; ++c) probs[i * classes + c] = std::exp(row[c] - log_z);
    loss += log_z - row[labels[i]];
  }
  loss /= static_cast<double>(count);

  const bool grad = tracks(tape, {&logits});
  Tensor out = make_output({1}, {loss}, grad);
  if (grad) {
    auto ln = logits.node(), on = out.node();
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    Mask msk(mask.begin(), mask.end());
    tape.record(out, [ln, on, probs = std::move(probs), lab = std::move(lab),
                      msk = std::move(msk), n, classes, count] {
      ln->ensure_grad();
      const double g = on->grad[0] / static_cast<double>(count);
      for (std::size_t i = 0; i < n; ++i) {
        if (!msk[i]) continue;
        for (std::size_t c = 0; c < classes; ++c) {
          const double target = c == lab[i] ? 1.0 : 0.0;
          ln->grad[i * classes + c] += g * (probs[i * classes + c] - target);
        }
      }
    });
  }
  return out;
}

Tensor spmm(Tape& tape, const SparseMatrix& adj, const Tensor& h) {
  const Csr& p = adj.pattern;
  if (h.rank() != 2 || p.n_cols != h.rows()) {
    throw ShapeError("spmm: adjacency " + shape_string({p.n_rows, p.n_cols}) +
                     " incompatible with " + shape_string(h.shape()));
  }
  const std::size_t d = h.cols();
  std::vector<double> out(p.n_rows * d, 0.0);
  const auto H = h.data();
  for (std::size_t u = 0; u < p.n_rows; ++u) {
    double* row = out.data() + u * d;
    for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
      const double w = adj.values[e];
      const double* src = H.data() + p.col[e] * d;
      for (std::size_t j = 0; j < d; ++j) row[j] += w * src[j];
    }
  }
  const bool grad = tracks(tape, {&h});
  Tensor c = make_output({p.n_rows, d}, std::move(out), grad);
  if (grad) {
    auto hn = h.node(), cn = c.node();
    tape.record(c, [hn, cn, adj, d] {
      hn->ensure_grad();
      const Csr& p = adj.pattern;
      for (std::size_t u = 0; u < p.n_rows; ++u)
        for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
          const double w = adj.values[e];
          const std::size_t v = p.col[e];
          for (std::size_t j = 0; j < d; ++j) hn->grad[v * d + j] += w * cn->grad[u * d + j];
        }
    });
  }
  return c;
}

}  // namespace ops
}  // namespace guardnet
