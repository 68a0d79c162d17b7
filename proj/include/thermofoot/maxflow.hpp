#pragma once

#include <cstdint>
#include <vector>

namespace thermofoot {

/// s-t flow network with real capacities solved exactly by Dinic's
/// shortest-augmenting-path algorithm. Nodes are 0..n-1; the source and sink
/// are implicit and attached through terminal weights.
class FlowGraph {
public:
  explicit FlowGraph(int num_nodes);

  int num_nodes() const { return num_nodes_; }

  /// Directed edge from -> to with capacity `cap`, and to -> from with `reverse_cap`.
  void add_edge(int from, int to, double cap, double reverse_cap = 0.0);

  /// Adds capacity source -> node and node -> sink. Repeated calls accumulate.
  void add_terminal_weights(int node, double source_cap, double sink_cap);

  /// Runs max-flow; returns the flow value (equal to the min-cut capacity).
  double max_flow();

  /// After max_flow(): true when the node is reachable from the source in the residual graph.
  bool in_source_segment(int node) const { return source_side_[static_cast<std::size_t>(node)] != 0; }

private:
  struct Arc {
    int to;
    double residual;
  };

  int source() const { return num_nodes_; }
  int sink() const { return num_nodes_ + 1; }
  void push_arc(int from, int to, double cap, double reverse_cap);
  bool build_levels();
  double augment();
  void mark_source_side();

  int num_nodes_;
  double eps_ = 0.0;
  double max_cap_ = 0.0;
  double preflow_ = 0.0;
  std::vector<double> source_cap_;
  std::vector<double> sink_cap_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<int> level_;
  std::vector<std::size_t> cursor_;
  std::vector<std::uint8_t> source_side_;
};

} // namespace thermofoot
