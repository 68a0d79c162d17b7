#pragma once

// Exhaustive min-cut over every source/sink partition of a small graph.

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

struct SmallGraph {
  int n = 0;
  std::vector<double> source_cap, sink_cap;
  struct Edge {
    int from, to;
    double cap;
  };
  std::vector<Edge> edges;
};

inline double brute_force_min_cut(const SmallGraph& g) {
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t s = 0; s < (1u << g.n); ++s) {  // bit set = source side
    double cut = 0.0;
    for (int v = 0; v < g.n; ++v) {
      const bool src = (s >> v) & 1u;
      cut += src ? g.sink_cap[v] : g.source_cap[v];
    }
    for (const auto& e : g.edges)
      if (((s >> e.from) & 1u) && !((s >> e.to) & 1u)) cut += e.cap;
    best = std::min(best, cut);
  }
  return best;
}

inline SmallGraph random_graph(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nodes(1, 12), cap(0, 20), coin(0, 3);
  SmallGraph g;
  g.n = nodes(rng);
  for (int v = 0; v < g.n; ++v) {
    g.source_cap.push_back(coin(rng) == 0 ? 0.0 : cap(rng));
    g.sink_cap.push_back(coin(rng) == 0 ? 0.0 : cap(rng));
  }
  for (int a = 0; a < g.n; ++a)
    for (int b = 0; b < g.n; ++b)
      if (a != b && coin(rng) == 0) g.edges.push_back({a, b, double(cap(rng))});
  return g;
}

} // namespace oracle
