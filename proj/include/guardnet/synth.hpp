#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "guardnet/graph.hpp"

namespace guardnet {

/// Planted-partition graph with Gaussian features around class means.
struct SbmSpec {
  std::size_t n_nodes = 800;
  std::size_t clusters = 4;
  double p_in = 0.05;
  double p_out = 0.002;
  std::size_t feature_dim = 32;
  double signal = 1.0;  // scale of the class means; 0 gives label-free features
  std::uint64_t seed = 0;

  void validate() const;
};

SparseGraph gen_sbm(const SbmSpec& spec);

/// Role labels of the cycle-with-houses graph.
enum class HouseRole : std::size_t {
  cycle = 0,
  anchor = 1,
  anchor_neighbor = 2,  // cycle node next to an anchor
  base = 3,
  top = 4,
  roof = 5,
};

/// Cycle of cycle_length nodes; every anchor_spacing-th node is an anchor
/// holding one 5-node house (square plus roof) hung from its roof, so both
/// halves of the house are mirror images. houses = cycle_length /
/// anchor_spacing. With spacing 4 or 5 every label is a single orbit of
/// the automorphism group; wider spacing lumps cycle nodes at different
/// distances from the anchors into one label.
struct CycleHouseSpec {
  std::size_t cycle_length = 444;
  std::size_t anchor_spacing = 4;
  std::uint64_t seed = 0;  // permutes node ids

  void validate() const;
  std::size_t houses() const { return cycle_length / anchor_spacing; }
  std::size_t n_nodes() const { return cycle_length + 5 * houses(); }
};

/// Featureless graph labelled with HouseRole values (6 classes).
SparseGraph gen_cycle_house(const CycleHouseSpec& spec);

}  // namespace guardnet
