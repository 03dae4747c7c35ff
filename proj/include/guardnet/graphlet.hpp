#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "guardnet/graph.hpp"

namespace guardnet {

inline constexpr std::size_t kOrbits = 15;

/// Orbit counts of connected graphlets on 2-4 nodes, one row per node.
///  0 degree | 1,2 path P3 end/middle | 3 triangle | 4,5 path P4 end/inner
///  6,7 star leaf/center | 8 cycle C4 | 9,10,11 paw pendant/side/hub
///  12,13 diamond degree-2/degree-3 | 14 clique K4
struct GdvTable {
  std::size_t n = 0;
  std::vector<std::uint64_t> counts;  // n x kOrbits, row-major

  std::uint64_t at(std::size_t u, std::size_t orbit) const { return counts[u * kOrbits + orbit]; }
  std::span<const std::uint64_t> row(std::size_t u) const {
    return std::span<const std::uint64_t>(counts).subspan(u * kOrbits, kOrbits);
  }
};

/// Exact orbit counts by enumerating connected induced 3- and 4-node subsets.
GdvTable count_orbits(const SparseGraph& graph);

/// Number of triangles in the graph.
std::uint64_t count_triangles(const SparseGraph& graph);

/// CSV, one row per node, kOrbits integer columns, no header.
void write_gdv_csv(const GdvTable& table, const std::filesystem::path& path);
GdvTable read_gdv_csv(const std::filesystem::path& path);

}  // namespace guardnet
