#pragma once

#include <cstddef>
#include <vector>

namespace pace::detail {

// Dinic's algorithm over double capacities. Residuals at or below `eps` are
// treated as saturated. run() augments from the current flow, so it can be
// called again after raising capacities.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t nodes, double eps = 1e-15);

  std::size_t add_edge(std::size_t from, std::size_t to, double capacity);
  void set_capacity(std::size_t edge, double capacity);
  double flow(std::size_t edge) const { return edges_[edge].flow; }

  double run(std::size_t source, std::size_t sink);

 private:
  struct Edge {
    std::size_t to;
    double capacity;
    double flow;
  };

  bool build_levels(std::size_t source, std::size_t sink);
  double push(std::size_t node, std::size_t sink, double limit);

  double eps_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<int> level_;
  std::vector<std::size_t> cursor_;
};

}  // namespace pace::detail
