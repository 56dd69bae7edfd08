#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace posbias::testing {

/// Earth mover's distance between two discrete distributions on common
/// support points, solved as a min-cost flow by successive shortest paths
/// (Bellman-Ford on the residual graph). Ground cost is |x_i - x_j|.
inline double min_cost_transport(const std::vector<double>& p, const std::vector<double>& q,
                                 const std::vector<double>& support) {
  const std::size_t k = support.size();
  const std::size_t source = 2 * k, sink = 2 * k + 1, nodes = 2 * k + 2;
  struct Edge {
    std::size_t to;
    double cap;
    double cost;
    std::size_t rev;
  };
  std::vector<std::vector<Edge>> graph(nodes);
  auto add_edge = [&](std::size_t from, std::size_t to, double cap, double cost) {
    graph[from].push_back({to, cap, cost, graph[to].size()});
    graph[to].push_back({from, 0.0, -cost, graph[from].size() - 1});
  };
  double supply = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    add_edge(source, i, p[i], 0.0);
    add_edge(k + i, sink, q[i], 0.0);
    supply += p[i];
    for (std::size_t j = 0; j < k; ++j) add_edge(i, k + j, 1e18, std::abs(support[i] - support[j]));
  }

  constexpr double eps = 1e-15;
  double total_cost = 0.0;
  double shipped = 0.0;
  while (shipped < supply - eps) {
    std::vector<double> dist(nodes, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> prev_node(nodes), prev_edge(nodes);
    dist[source] = 0.0;
    for (std::size_t round = 0; round < nodes; ++round) {
      bool changed = false;
      for (std::size_t u = 0; u < nodes; ++u) {
        if (std::isinf(dist[u])) continue;
        for (std::size_t e = 0; e < graph[u].size(); ++e) {
          const auto& edge = graph[u][e];
          if (edge.cap <= eps) continue;
          if (dist[u] + edge.cost < dist[edge.to] - 1e-15) {
            dist[edge.to] = dist[u] + edge.cost;
            prev_node[edge.to] = u;
            prev_edge[edge.to] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (std::isinf(dist[sink])) break;
    double push = std::numeric_limits<double>::infinity();
    for (auto v = sink; v != source; v = prev_node[v]) push = std::min(push, graph[prev_node[v]][prev_edge[v]].cap);
    for (auto v = sink; v != source; v = prev_node[v]) {
      auto& edge = graph[prev_node[v]][prev_edge[v]];
      edge.cap -= push;
      graph[v][edge.rev].cap += push;
    }
    shipped += push;
    total_cost += push * dist[sink];
  }
  return total_cost;
}

}  // namespace posbias::testing
