#include "max_flow.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace pace::detail {

MaxFlow::MaxFlow(std::size_t nodes, double eps) : eps_(eps), adjacency_(nodes) {}

std::size_t MaxFlow::add_edge(std::size_t from, std::size_t to, double capacity) {
  const std::size_t id = edges_.size();
  edges_.push_back({to, capacity, 0.0});
  adjacency_[from].push_back(id);
  edges_.push_back({from, 0.0, 0.0});
  adjacency_[to].push_back(id + 1);
  return id;
}

void MaxFlow::set_capacity(std::size_t edge, double capacity) { edges_[edge].capacity = capacity; }

bool MaxFlow::build_levels(std::size_t source, std::size_t sink) {
  level_.assign(adjacency_.size(), -1);
  std::queue<std::size_t> frontier;
  level_[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t id : adjacency_[u]) {
      const Edge& e = edges_[id];
      if (level_[e.to] < 0 && e.capacity - e.flow > eps_) {
        level_[e.to] = level_[u] + 1;
        frontier.push(e.to);
      }
    }
  }
  return level_[sink] >= 0;
}

double MaxFlow::push(std::size_t node, std::size_t sink, double limit) {
  if (node == sink) return limit;
  for (std::size_t& k = cursor_[node]; k < adjacency_[node].size(); ++k) {
    const std::size_t id = adjacency_[node][k];
    Edge& e = edges_[id];
    const double residual = e.capacity - e.flow;
    if (residual <= eps_ || level_[e.to] != level_[node] + 1) continue;
    const double pushed = push(e.to, sink, std::min(limit, residual));
    if (pushed > eps_) {
      e.flow += pushed;
      edges_[id ^ 1].flow -= pushed;
      return pushed;
    }
  }
  return 0.0;
}

double MaxFlow::run(std::size_t source, std::size_t sink) {
  double total = 0.0;
  while (build_levels(source, sink)) {
    cursor_.assign(adjacency_.size(), 0);
    for (;;) {
      const double pushed = push(source, sink, std::numeric_limits<double>::infinity());
      if (pushed <= eps_) break;
      total += pushed;
    }
  }
  return total;
}

}  // namespace pace::detail
