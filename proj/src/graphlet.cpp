#include "guardnet/graphlet.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace guardnet {

namespace {

// ESU enumeration: every connected induced subgraph with 3 or 4 nodes is
// visited exactly once, rooted at its smallest node.
class OrbitCounter {
 public:
  explicit OrbitCounter(const SparseGraph& g) : g_(g) {
    table_.n = g.n_nodes();
    table_.counts.assign(table_.n * kOrbits, 0);
  }

  GdvTable run() {
    for (std::size_t v = 0; v < g_.n_nodes(); ++v) {
      table_.counts[v * kOrbits] = g_.degree(v);
      sub_[0] = v;
      std::vector<std::size_t> ext;
      for (std::size_t w : g_.neighbors(v))
        if (w > v) ext.push_back(w);
      extend(1, ext, v);
    }
    return std::move(table_);
  }

 private:
  bool adjacent_to_sub(std::size_t x, std::size_t size) const {
    for (std::size_t i = 0; i < size; ++i)
      if (sub_[i] == x || g_.has_edge(sub_[i], x)) return true;
    return false;
  }

  void extend(std::size_t size, std::vector<std::size_t> ext, std::size_t root) {
    while (!ext.empty()) {
      const std::size_t w = ext.back();
      ext.pop_back();
      sub_[size] = w;
      if (size + 1 >= 3) classify(size + 1);
      if (size + 1 == 4) continue;
      std::vector<std::size_t> next = ext;
      for (std::size_t u : g_.neighbors(w)) {
        if (u <= root || adjacent_to_sub(u, size)) continue;
        if (std::find(next.begin(), next.end(), u) == next.end()) next.push_back(u);
      }
      extend(size + 1, std::move(next), root);
    }
  }

  void bump(std::size_t node, std::size_t orbit) { ++table_.counts[node * kOrbits + orbit]; }

  void classify(std::size_t size) {
    std::array<std::size_t, 4> deg{0, 0, 0, 0};
    std::size_t edges = 0;
    for (std::size_t i = 0; i < size; ++i)
      for (std::size_t j = i + 1; j < size; ++j)
        if (g_.has_edge(sub_[i], sub_[j])) {
          ++deg[i];
          ++deg[j];
          ++edges;
        }
    if (size == 3) {
      for (std::size_t i = 0; i < 3; ++i) bump(sub_[i], edges == 3 ? 3 : (deg[i] == 2 ? 2 : 1));
      return;
    }
    const std::size_t max_deg = *std::max_element(deg.begin(), deg.end());
    for (std::size_t i = 0; i < 4; ++i) {
      std::size_t orbit = 0;
      switch (edges) {
        case 3: orbit = max_deg == 3 ? (deg[i] == 3 ? 7 : 6) : (deg[i] == 1 ? 4 : 5); break;
        case 4: orbit = max_deg == 2 ? 8 : (deg[i] == 1 ? 9 : deg[i] == 2 ? 10 : 11); break;
        case 5: orbit = deg[i] == 2 ? 12 : 13; break;
        default: orbit = 14; break;
      }
      bump(sub_[i], orbit);
    }
  }

  const SparseGraph& g_;
  GdvTable table_;
  std::array<std::size_t, 4> sub_{};
};

}  // namespace

GdvTable count_orbits(const SparseGraph& graph) { return OrbitCounter(graph).run(); }

std::uint64_t count_triangles(const SparseGraph& graph) {
  std::uint64_t total = 0;
  for (std::size_t u = 0; u < graph.n_nodes(); ++u)
    for (std::size_t v : graph.neighbors(u)) {
      if (v <= u) continue;
      for (std::size_t w : graph.neighbors(v))
        if (w > v && graph.has_edge(u, w)) ++total;
    }
  return total;
}

void write_gdv_csv(const GdvTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (std::size_t u = 0; u < table.n; ++u) {
    for (std::size_t o = 0; o < kOrbits; ++o) out << (o ? "," : "") << table.at(u, o);
    out << '\n';
  }
}

GdvTable read_gdv_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  GdvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        table.counts.push_back(std::stoull(cell));
      } catch (const std::exception&) {
        throw ValidationError(path.filename().string() + ":" + std::to_string(line_no) +
                              ": bad orbit count '" + cell + "'");
      }
      ++count;
    }
    if (count != kOrbits) {
      throw ValidationError(path.filename().string() + ":" + std::to_string(line_no) +
                            ": expected " + std::to_string(kOrbits) + " columns");
    }
    ++table.n;
  }
  return table;
}

}  // namespace guardnet
