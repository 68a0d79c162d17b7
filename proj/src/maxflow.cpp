#include "thermofoot/maxflow.hpp"

#include "thermofoot/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace thermofoot {

FlowGraph::FlowGraph(int num_nodes)
    : num_nodes_(num_nodes),
      source_cap_(static_cast<std::size_t>(num_nodes), 0.0),
      sink_cap_(static_cast<std::size_t>(num_nodes), 0.0),
      adjacency_(static_cast<std::size_t>(num_nodes) + 2) {
  if (num_nodes < 0) throw Error(Errc::InvalidArgument, "negative node count");
}

void FlowGraph::push_arc(int from, int to, double cap, double reverse_cap) {
  adjacency_[static_cast<std::size_t>(from)].push_back(static_cast<int>(arcs_.size()));
  arcs_.push_back({to, cap});
  adjacency_[static_cast<std::size_t>(to)].push_back(static_cast<int>(arcs_.size()));
  arcs_.push_back({from, reverse_cap});
  max_cap_ = std::max({max_cap_, cap, reverse_cap});
}

void FlowGraph::add_edge(int from, int to, double cap, double reverse_cap) {
  if (from < 0 || to < 0 || from >= num_nodes_ || to >= num_nodes_ || from == to)
    throw Error(Errc::InvalidArgument, "edge endpoints out of range");
  if (cap < 0.0 || reverse_cap < 0.0) throw Error(Errc::InvalidArgument, "negative capacity");
  push_arc(from, to, cap, reverse_cap);
}

void FlowGraph::add_terminal_weights(int node, double source_cap, double sink_cap) {
  if (node < 0 || node >= num_nodes_) throw Error(Errc::InvalidArgument, "terminal node out of range");
  if (source_cap < 0.0 || sink_cap < 0.0) throw Error(Errc::InvalidArgument, "negative capacity");
  source_cap_[static_cast<std::size_t>(node)] += source_cap;
  sink_cap_[static_cast<std::size_t>(node)] += sink_cap;
}

bool FlowGraph::build_levels() {
  std::fill(level_.begin(), level_.end(), -1);
  std::queue<int> frontier;
  level_[static_cast<std::size_t>(source())] = 0;
  frontier.push(source());
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int a : adjacency_[static_cast<std::size_t>(u)]) {
      const Arc& arc = arcs_[static_cast<std::size_t>(a)];
      if (arc.residual > eps_ && level_[static_cast<std::size_t>(arc.to)] < 0) {
        level_[static_cast<std::size_t>(arc.to)] = level_[static_cast<std::size_t>(u)] + 1;
        frontier.push(arc.to);
      }
    }
  }
  return level_[static_cast<std::size_t>(sink())] >= 0;
}

// Blocking flow over the level graph using current-arc pointers and an explicit path stack.
double FlowGraph::augment() {
  double total = 0.0;
  std::vector<int> path;  // arc indices from the source
  int u = source();
  while (true) {
    if (u == sink()) {
      double bottleneck = std::numeric_limits<double>::infinity();
      for (int a : path) bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(a)].residual);
      for (int a : path) {
        arcs_[static_cast<std::size_t>(a)].residual -= bottleneck;
        arcs_[static_cast<std::size_t>(a ^ 1)].residual += bottleneck;
      }
      total += bottleneck;
      // Retreat to the tail of the first saturated arc.
      std::size_t keep = 0;
      while (keep < path.size() && arcs_[static_cast<std::size_t>(path[keep])].residual > eps_) ++keep;
      path.resize(keep);
      u = path.empty() ? source() : arcs_[static_cast<std::size_t>(path.back())].to;
      continue;
    }
    auto& adj = adjacency_[static_cast<std::size_t>(u)];
    auto& cur = cursor_[static_cast<std::size_t>(u)];
    bool advanced = false;
    for (; cur < adj.size(); ++cur) {
      const int a = adj[cur];
      const Arc& arc = arcs_[static_cast<std::size_t>(a)];
      if (arc.residual > eps_ &&
          level_[static_cast<std::size_t>(arc.to)] == level_[static_cast<std::size_t>(u)] + 1) {
        path.push_back(a);
        u = arc.to;
        advanced = true;
        break;
      }
    }
    if (advanced) continue;
    // Dead end: remove u from the level graph and retreat.
    level_[static_cast<std::size_t>(u)] = -1;
    if (path.empty()) break;
    path.pop_back();
    u = path.empty() ? source() : arcs_[static_cast<std::size_t>(path.back())].to;
    ++cursor_[static_cast<std::size_t>(u)];
  }
  return total;
}

void FlowGraph::mark_source_side() {
  source_side_.assign(static_cast<std::size_t>(num_nodes_) + 2, 0);
  std::vector<int> stack{source()};
  source_side_[static_cast<std::size_t>(source())] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int a : adjacency_[static_cast<std::size_t>(u)]) {
      const Arc& arc = arcs_[static_cast<std::size_t>(a)];
      if (arc.residual > eps_ && !source_side_[static_cast<std::size_t>(arc.to)]) {
        source_side_[static_cast<std::size_t>(arc.to)] = 1;
        stack.push_back(arc.to);
      }
    }
  }
}

double FlowGraph::max_flow() {
  // Route flow straight through s -> v -> t first; on segmentation graphs this
  // settles most terminal capacity before any search.
  preflow_ = 0.0;
  for (int v = 0; v < num_nodes_; ++v) {
    auto& s = source_cap_[static_cast<std::size_t>(v)];
    auto& t = sink_cap_[static_cast<std::size_t>(v)];
    const double direct = std::min(s, t);
    preflow_ += direct;
    s -= direct;
    t -= direct;
    if (s > 0.0) push_arc(source(), v, s, 0.0);
    if (t > 0.0) push_arc(v, sink(), t, 0.0);
    s = t = 0.0;
  }
  eps_ = std::max(max_cap_, 1.0) * 1e-13;
  level_.assign(static_cast<std::size_t>(num_nodes_) + 2, -1);
  cursor_.assign(static_cast<std::size_t>(num_nodes_) + 2, 0);

  double flow = preflow_;
  while (build_levels()) {
    std::fill(cursor_.begin(), cursor_.end(), 0);
    flow += augment();
  }
  mark_source_side();
  return flow;
}

} // namespace thermofoot
