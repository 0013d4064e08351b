#include "popcal/mincostflow.hpp"

#include <algorithm>
#include <cassert>
#include <climits>
#include <queue>

#include "popcal/common.hpp"

namespace popcal {

namespace {
constexpr std::int64_t kInf = LLONG_MAX / 4;
}

MinCostFlow::MinCostFlow(int num_nodes) : n_(num_nodes), graph_(num_nodes) {}

int MinCostFlow::add_arc(int from, int to, std::int64_t cap,
                         std::int64_t cost) {
  if (from < 0 || from >= n_ || to < 0 || to >= n_ || cap < 0 || cost < 0)
    throw UsageError("invalid arc in flow network");
  int id = static_cast<int>(arc_pos_.size());
  arc_pos_.push_back({from, static_cast<int>(graph_[from].size())});
  graph_[from].push_back(
      {to, static_cast<int>(graph_[to].size()), cap, cost});
  graph_[to].push_back(
      {from, static_cast<int>(graph_[from].size()) - 1, 0, -cost});
  return id;
}

std::int64_t MinCostFlow::flow_on(int arc_id) const {
  auto [node, slot] = arc_pos_[arc_id];
  const Arc& fwd = graph_[node][slot];
  return graph_[fwd.to][fwd.rev].cap;  // reverse capacity == pushed flow
}

bool MinCostFlow::dijkstra(int s, int t, std::vector<std::int64_t>* dist) {
  dist->assign(n_, kInf);
  (*dist)[s] = 0;
  using Entry = std::pair<std::int64_t, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
  pq.push({0, s});
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > (*dist)[v]) continue;
    for (const Arc& a : graph_[v]) {
      if (a.cap <= 0) continue;
      std::int64_t nd = d + a.cost + potential_[v] - potential_[a.to];
      if (nd < (*dist)[a.to]) {
        (*dist)[a.to] = nd;
        pq.push({nd, a.to});
      }
    }
  }
  return (*dist)[t] < kInf;
}

std::int64_t MinCostFlow::blocking_flow(int s, int t, std::int64_t limit) {
  auto tight = [this](int v, const Arc& a) {
    return a.cap > 0 && a.cost + potential_[v] - potential_[a.to] == 0;
  };

  level_.assign(n_, -1);
  std::vector<int> queue;
  queue.reserve(n_);
  queue.push_back(s);
  level_[s] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    int v = queue[head];
    for (const Arc& a : graph_[v]) {
      if (tight(v, a) && level_[a.to] < 0) {
        level_[a.to] = level_[v] + 1;
        queue.push_back(a.to);
      }
    }
  }
  if (level_[t] < 0) return 0;

  iter_.assign(n_, 0);
  std::int64_t pushed_total = 0;
  std::vector<std::pair<int, std::size_t>> path;  // (node, arc slot)

  while (pushed_total < limit) {
    path.clear();
    int v = s;
    bool reached = false;
    while (true) {
      if (v == t) {
        reached = true;
        break;
      }
      bool advanced = false;
      for (std::size_t& it = iter_[v]; it < graph_[v].size(); ++it) {
        const Arc& a = graph_[v][it];
        if (tight(v, a) && level_[a.to] == level_[v] + 1) {
          path.push_back({v, it});
          v = a.to;
          advanced = true;
          break;
        }
      }
      if (advanced) continue;
      if (v == s) break;  // no further augmenting path in this phase
      auto [pv, slot] = path.back();
      path.pop_back();
      iter_[pv]++;
      v = pv;
    }
    if (!reached) break;

    std::int64_t f = limit - pushed_total;
    for (auto [node, slot] : path) f = std::min(f, graph_[node][slot].cap);
    for (auto [node, slot] : path) {
      Arc& a = graph_[node][slot];
      a.cap -= f;
      graph_[a.to][a.rev].cap += f;
    }
    pushed_total += f;
  }
  return pushed_total;
}

MinCostFlow::Result MinCostFlow::solve(int s, int t, std::int64_t want) {
  potential_.assign(n_, 0);
  Result res;
  while (res.flow < want) {
    std::vector<std::int64_t> dist;
    if (!dijkstra(s, t, &dist)) break;
    for (int v = 0; v < n_; ++v)
      potential_[v] += std::min(dist[v], dist[t]);
    std::int64_t got = blocking_flow(s, t, want - res.flow);
    if (got == 0) break;
    res.flow += got;
  }
  for (std::size_t id = 0; id < arc_pos_.size(); ++id) {
    auto [node, slot] = arc_pos_[id];
    res.cost += flow_on(static_cast<int>(id)) * graph_[node][slot].cost;
  }
  return res;
}

}  // namespace popcal
