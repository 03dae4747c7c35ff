#include "guardnet/graph_ops.hpp"

#include <algorithm>
#include <cmath>

#include "ops_internal.hpp"

namespace guardnet {

using internal::make_output;
using internal::tracks;

std::vector<std::size_t> reverse_index(const Csr& p) {
  std::vector<std::size_t> rev(p.nnz());
  for (std::size_t u = 0; u < p.n_rows; ++u) {
    for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
      const std::size_t v = p.col[e];
      const auto first = p.col.begin() + static_cast<std::ptrdiff_t>(p.row_ptr[v]);
      const auto last = p.col.begin() + static_cast<std::ptrdiff_t>(p.row_ptr[v + 1]);
      const auto it = std::lower_bound(first, last, u);
      if (it == last || *it != u) {
        throw PreconditionError("reverse_index: pattern is not symmetric at (" +
                                std::to_string(u) + "," + std::to_string(v) + ")");
      }
      rev[e] = static_cast<std::size_t>(it - p.col.begin());
    }
  }
  return rev;
}

namespace ops {

Tensor edge_aggregate(Tape& tape, const Csr& p, const Tensor& edge_w,
                      const Tensor& self_w, const Tensor& h) {
  if (h.rank() != 2 || h.rows() != p.n_rows || p.n_rows != p.n_cols) {
    throw ShapeError("edge_aggregate: features " + shape_string(h.shape()) +
                     " incompatible with pattern " + shape_string({p.n_rows, p.n_cols}));
  }
  if (edge_w.size() != p.nnz() || self_w.size() != p.n_rows) {
    throw ShapeError("edge_aggregate: expected " + std::to_string(p.nnz()) +
                     " edge weights and " + std::to_string(p.n_rows) + " self weights, got " +
                     shape_string(edge_w.shape()) + " and " + shape_string(self_w.shape()));
  }
  const std::size_t n = p.n_rows, d = h.cols();
  const auto H = h.data();
  std::vector<double> out(n * d);
  for (std::size_t u = 0; u < n; ++u) {
    double* row = out.data() + u * d;
    const double ws = self_w[u];
    for (std::size_t j = 0; j < d; ++j) row[j] = ws * H[u * d + j];
    for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
      const double w = edge_w[e];
      if (w == 0.0) continue;
      const double* src = H.data() + p.col[e] * d;
      for (std::size_t j = 0; j < d; ++j) row[j] += w * src[j];
    }
  }
  const bool grad = tracks(tape, {&edge_w, &self_w, &h});
  Tensor c = make_output({n, d}, std::move(out), grad);
  if (grad) {
    auto en = edge_w.node(), sn = self_w.node(), hn = h.node(), cn = c.node();
    tape.record(c, [&p, en, sn, hn, cn, n, d] {
      const auto& G = cn->grad;
      const auto& Hd = hn->data;
      if (hn->requires_grad) hn->ensure_grad();
      if (en->requires_grad) en->ensure_grad();
      if (sn->requires_grad) sn->ensure_grad();
      for (std::size_t u = 0; u < n; ++u) {
        const double* gu = G.data() + u * d;
        if (sn->requires_grad) {
          double acc = 0.0;
          for (std::size_t j = 0; j < d; ++j) acc += gu[j] * Hd[u * d + j];
          sn->grad[u] += acc;
        }
        if (hn->requires_grad) {
          const double ws = sn->data[u];
          for (std::size_t j = 0; j < d; ++j) hn->grad[u * d + j] += ws * gu[j];
        }
        for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
          const std::size_t v = p.col[e];
          if (en->requires_grad) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += gu[j] * Hd[v * d + j];
            en->grad[e] += acc;
          }
          if (hn->requires_grad) {
            const double w = en->data[e];
            for (std::size_t j = 0; j < d; ++j) hn->grad[v * d + j] += w * gu[j];
          }
        }
      }
    });
  }
  return c;
}

Tensor edge_cosine(Tape& tape, const Csr& p, const Tensor& h) {
  if (h.rank() != 2 || h.rows() != p.n_rows) {
    throw ShapeError("edge_cosine: features " + shape_string(h.shape()) +
                     " incompatible with pattern of " + std::to_string(p.n_rows) + " rows");
  }
  const std::size_t n = p.n_rows, d = h.cols();
  const auto H = h.data();
  std::vector<double> norms(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += H[u * d + j] * H[u * d + j];
    norms[u] = std::sqrt(acc);
  }
  std::vector<double> out(p.nnz(), 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
      const std::size_t v = p.col[e];
      if (norms[u] == 0.0 || norms[v] == 0.0) continue;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += H[u * d + j] * H[v * d + j];
      out[e] = dot / (norms[u] * norms[v]);
    }
  }
  const bool grad = tracks(tape, {&h});
  Tensor c = make_output({p.nnz()}, std::move(out), grad);
  if (grad) {
    auto hn = h.node(), cn = c.node();
    tape.record(c, [&p, hn, cn, norms = std::move(norms), n, d] {
      hn->ensure_grad();
      const auto& Hd = hn->data;
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
          const std::size_t v = p.col[e];
          const double g = cn->grad[e];
          if (g == 0.0 || norms[u] == 0.0 || norms[v] == 0.0) continue;
          const double s = cn->data[e];
          const double inv = 1.0 / (norms[u] * norms[v]);
          const double iu = s / (norms[u] * norms[u]);
          const double iv = s / (norms[v] * norms[v]);
          for (std::size_t j = 0; j < d; ++j) {
            hn->grad[u * d + j] += g * (Hd[v * d + j] * inv - Hd[u * d + j] * iu);
            hn->grad[v * d + j] += g * (Hd[u * d + j] * inv - Hd[v * d + j] * iv);
          }
        }
      }
    });
  }
  return c;
}

Importance normalize_importance(Tape& tape, const Csr& p, const Tensor& scores) {
  if (scores.size() != p.nnz()) {
    throw ShapeError("normalize_importance: expected " + std::to_string(p.nnz()) +
                     " scores, got " + shape_string(scores.shape()));
  }
  const std::size_t n = p.n_rows;
  std::vector<double> edge(p.nnz(), 0.0), self(n, 1.0), row_sum(n, 0.0), factor(n, 0.0);
  std::vector<std::size_t> support(n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e) {
      const double s = scores[e];
      if (s < 0.0) {
        throw PreconditionError("normalize_importance: negative score at entry " +
                                std::to_string(e));
      }
      if (s > 0.0) ++support[u];
      row_sum[u] += s;
    }
    const double k = static_cast<double>(support[u]);
    self[u] = 1.0 / (k + 1.0);
    if (support[u] == 0) continue;
    factor[u] = k / (k + 1.0);
    for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e)
      edge[e] = scores[e] / row_sum[u] * factor[u];
  }
  const bool grad = tracks(tape, {&scores});
  Importance result{make_output({p.nnz()}, std::move(edge), grad),
                    make_output({n}, std::move(self), false), std::move(support)};
  if (grad) {
    auto sn = scores.node(), en = result.edge.node();
    tape.record(result.edge, [&p, sn, en, row_sum = std::move(row_sum),
                              factor = std::move(factor), n] {
      sn->ensure_grad();
      for (std::size_t u = 0; u < n; ++u) {
        if (factor[u] == 0.0) continue;
        const double S = row_sum[u];
        double weighted = 0.0;
        for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e)
          weighted += en->grad[e] * sn->data[e];
        for (std::size_t e = p.row_ptr[u]; e < p.row_ptr[u + 1]; ++e)
          sn->grad[e] += factor[u] * (en->grad[e] / S - weighted / (S * S));
      }
    });
  }
  return result;
}

Tensor edge_pairs(Tape& tape, std::span<const std::size_t> reverse, const Tensor& x) {
  if (reverse.size() != x.size()) {
    throw ShapeError("edge_pairs: " + std::to_string(reverse.size()) + " entries vs values " +
                     shape_string(x.shape()));
  }
  const std::size_t m = x.size();
  std::vector<double> out(2 * m);
  for (std::size_t e = 0; e < m; ++e) {
    out[2 * e] = x[e];
    out[2 * e + 1] = x[reverse[e]];
  }
  const bool grad = tracks(tape, {&x});
  Tensor c = make_output({m, 2}, std::move(out), grad);
  if (grad) {
    auto xn = x.node(), cn = c.node();
    std::vector<std::size_t> rev(reverse.begin(), reverse.end());
    tape.record(c, [xn, cn, rev = std::move(rev), m] {
      xn->ensure_grad();
      for (std::size_t e = 0; e < m; ++e) {
        xn->grad[e] += cn->grad[2 * e];
        xn->grad[rev[e]] += cn->grad[2 * e + 1];
      }
    });
  }
  return c;
}

}  // namespace ops
}  // namespace guardnet
