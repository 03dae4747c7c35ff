#include "guardnet/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace guardnet {

void SbmSpec::validate() const {
  if (n_nodes == 0 || clusters == 0 || feature_dim == 0) {
    throw ValidationError("sbm sizes must be positive");
  }
  if (clusters > n_nodes) throw ValidationError("sbm has more clusters than nodes");
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0)) {
    throw ValidationError("sbm probabilities must lie in [0, 1]");
  }
  if (!(signal >= 0.0)) throw ValidationError("sbm signal must be nonnegative");
}

SparseGraph gen_sbm(const SbmSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::size_t n = spec.n_nodes, c = spec.clusters, d = spec.feature_dim;
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i * c / n;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (unit(rng) < (labels[i] == labels[j] ? spec.p_in : spec.p_out)) edges.emplace_back(i, j);

  // Class c owns the feature dimensions j with j % clusters == c.
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      x[i * d + j] = noise(rng) + (j % c == labels[i] ? spec.signal : 0.0);

  return SparseGraph::from_edges(n, edges, Tensor({n, d}, std::move(x)), std::move(labels), c);
}

void CycleHouseSpec::validate() const {
  if (cycle_length < 3) throw ValidationError("cycle needs at least 3 nodes");
  if (anchor_spacing < 4 || anchor_spacing > cycle_length) {
    throw ValidationError("anchor spacing must lie in [4, cycle_length]");
  }
  if (cycle_length % anchor_spacing != 0) {
    throw ValidationError("anchor spacing " + std::to_string(anchor_spacing) +
                          " does not divide cycle length " + std::to_string(cycle_length));
  }
}

SparseGraph gen_cycle_house(const CycleHouseSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_nodes();
  std::vector<std::size_t> id(n);
  std::iota(id.begin(), id.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(id.begin(), id.end(), rng);

  std::vector<std::size_t> labels(n);
  std::vector<Edge> edges;
  const auto link = [&](std::size_t a, std::size_t b) { edges.emplace_back(id[a], id[b]); };
  const auto role = [&](std::size_t a, HouseRole r) { labels[id[a]] = static_cast<std::size_t>(r); };

  const std::size_t len = spec.cycle_length;
  for (std::size_t i = 0; i < len; ++i) {
    link(i, (i + 1) % len);
    const std::size_t offset = i % spec.anchor_spacing;
    role(i, offset == 0                                                  ? HouseRole::anchor
            : offset == 1 || offset + 1 == spec.anchor_spacing ? HouseRole::anchor_neighbor
                                                                 : HouseRole::cycle);
  }
  std::size_t next = len;
  for (std::size_t a = 0; a < len; a += spec.anchor_spacing) {
    const std::size_t b1 = next, b2 = next + 1, t1 = next + 2, t2 = next + 3, r = next + 4;
    next += 5;
    link(a, r);
    link(r, t1);
    link(r, t2);
    link(t1, t2);
    link(t1, b1);
    link(t2, b2);
    link(b1, b2);
    role(b1, HouseRole::base);
    role(b2, HouseRole::base);
    role(t1, HouseRole::top);
    role(t2, HouseRole::top);
    role(r, HouseRole::roof);
  }
  return SparseGraph::from_edges(n, edges, std::nullopt, std::move(labels), 6);
}

}  // namespace guardnet
