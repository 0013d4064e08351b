#pragma once

#include <cstdint>
#include <vector>

namespace popcal {

/// Exact min-cost flow with non-negative integer costs.
/// Successive shortest paths with potentials; each phase runs one Dijkstra
/// and then saturates the zero-reduced-cost subgraph with a blocking flow,
/// so large unit-capacity bipartite instances stay tractable.
class MinCostFlow {
 public:
  explicit MinCostFlow(int num_nodes);

  // Returns an arc id usable with flow_on(). cap >= 0, cost >= 0.
  int add_arc(int from, int to, std::int64_t cap, std::int64_t cost);

  // Sends up to `want` units from s to t (all of it if the graph allows).
  // Returns (flow actually sent, total cost). Deterministic.
  struct Result {
    std::int64_t flow = 0;
    std::int64_t cost = 0;
  };
  Result solve(int s, int t, std::int64_t want);

  std::int64_t flow_on(int arc_id) const;

 private:
  struct Arc {
    int to;
    int rev;  // index of reverse arc in graph_[to]
    std::int64_t cap;
    std::int64_t cost;
  };
  int n_;
  std::vector<std::vector<Arc>> graph_;
  std::vector<std::pair<int, int>> arc_pos_;  // public id -> (node, slot)

  bool dijkstra(int s, int t, std::vector<std::int64_t>* dist);
  std::int64_t blocking_flow(int s, int t, std::int64_t limit);
  std::vector<std::int64_t> potential_;
  std::vector<int> level_;
  std::vector<std::size_t> iter_;
};

}  // namespace popcal
