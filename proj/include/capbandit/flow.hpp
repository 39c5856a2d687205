#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "capbandit/error.hpp"

namespace capbandit {

/// Directed network with integer capacities and costs. Arcs are stored in
/// forward/reverse pairs: arc 2k is the k-th added arc, 2k+1 its residual twin.
class FlowNetwork {
 public:
  using Int = std::int64_t;
  static constexpr Int kInf = std::numeric_limits<Int>::max() / 4;

  struct Arc {
    int from;
    int to;
    Int cap;
    Int flow;
    Int cost;
    Int residual() const { return cap - flow; }
  };

  FlowNetwork(int nodes, int source, int sink)
      : nodes_(nodes), source_(source), sink_(sink),
        adj_(static_cast<std::size_t>(nodes > 0 ? nodes : 0)) {
    if (nodes < 2 || source < 0 || source >= nodes || sink < 0 || sink >= nodes ||
        source == sink)
      throw Error(ErrorKind::NetworkMalformed, "bad node count or terminals");
  }

  /// Returns the arc id usable with `arc()` / `flow()`.
  int add_arc(int from, int to, Int cap, Int cost) {
    if (from < 0 || from >= nodes_ || to < 0 || to >= nodes_)
      throw Error(ErrorKind::NetworkMalformed, "arc endpoint out of range");
    if (cap < 0) throw Error(ErrorKind::NetworkMalformed, "negative capacity");
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({from, to, cap, 0, cost});
    arcs_.push_back({to, from, 0, 0, -cost});
    adj_[static_cast<std::size_t>(from)].push_back(id);
    adj_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  int node_count() const { return nodes_; }
  int source() const { return source_; }
  int sink() const { return sink_; }
  std::size_t arc_count() const { return arcs_.size() / 2; }
  const Arc& arc(int id) const { return arcs_[static_cast<std::size_t>(id)]; }
  Int flow(int id) const { return arcs_[static_cast<std::size_t>(id)].flow; }
  const std::vector<Int>& potentials() const { return potential_; }

  /// Flow conservation at interior nodes and 0 <= flow <= cap on every arc.
  bool feasible() const {
    std::vector<Int> balance(static_cast<std::size_t>(nodes_), 0);
    for (std::size_t i = 0; i < arcs_.size(); i += 2) {
      const auto& a = arcs_[i];
      if (a.flow < 0 || a.flow > a.cap) return false;
      balance[static_cast<std::size_t>(a.from)] -= a.flow;
      balance[static_cast<std::size_t>(a.to)] += a.flow;
    }
    for (int v = 0; v < nodes_; ++v)
      if (v != source_ && v != sink_ && balance[static_cast<std::size_t>(v)] != 0)
        return false;
    return true;
  }

  /// True when the residual network has no negative-cost cycle, i.e. the
  /// current flow is cheapest among flows of its value. Bellman-Ford from a
  /// virtual root connected to every node.
  bool certify_optimal() const {
    std::vector<Int> dist(static_cast<std::size_t>(nodes_), 0);
    for (int round = 0; round < nodes_; ++round) {
      bool changed = false;
      for (const auto& a : arcs_) {
        if (a.residual() <= 0) continue;
        const Int cand = dist[static_cast<std::size_t>(a.from)] + a.cost;
        if (cand < dist[static_cast<std::size_t>(a.to)]) {
          dist[static_cast<std::size_t>(a.to)] = cand;
          changed = true;
        }
      }
      if (!changed) return true;
    }
    return false;
  }

 private:
  friend struct McmfSolver;

  int nodes_;
  int source_;
  int sink_;
  std::vector<std::vector<int>> adj_;
  std::vector<Arc> arcs_;
  std::vector<Int> potential_;
};

struct FlowResult {
  FlowNetwork::Int flow = 0;
  FlowNetwork::Int cost = 0;
};

/// Successive shortest paths. Potentials start from a Bellman-Ford (queue
/// based) pass so negative arc costs are allowed as long as there is no
/// negative cycle; later paths use Dijkstra on reduced costs.
struct McmfSolver {
  using Int = FlowNetwork::Int;

  static FlowResult solve(FlowNetwork& net) {
    const auto n = static_cast<std::size_t>(net.nodes_);
    auto& arcs = net.arcs_;
    std::vector<Int> h(n, FlowNetwork::kInf);
    initial_potentials(net, h);

    FlowResult result;
    std::vector<Int> dist(n);
    std::vector<int> via(n);
    using Item = std::pair<Int, int>;
    while (true) {
      std::fill(dist.begin(), dist.end(), FlowNetwork::kInf);
      std::fill(via.begin(), via.end(), -1);
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      dist[static_cast<std::size_t>(net.source_)] = 0;
      heap.push({0, net.source_});
      while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        if (d != dist[static_cast<std::size_t>(v)]) continue;
        for (int id : net.adj_[static_cast<std::size_t>(v)]) {
          const auto& a = arcs[static_cast<std::size_t>(id)];
          if (a.residual() <= 0) continue;
          const auto w = static_cast<std::size_t>(a.to);
          if (h[w] >= FlowNetwork::kInf) continue;
          const Int nd = d + a.cost + h[static_cast<std::size_t>(v)] - h[w];
          if (nd < dist[w]) {
            dist[w] = nd;
            via[w] = id;
            heap.push({nd, a.to});
          }
        }
      }
      const auto t = static_cast<std::size_t>(net.sink_);
      if (dist[t] >= FlowNetwork::kInf) break;
      for (std::size_t v = 0; v < n; ++v)
        if (dist[v] < FlowNetwork::kInf) h[v] += dist[v];

      Int push = FlowNetwork::kInf;
      for (int v = net.sink_; v != net.source_;) {
        const auto& a = arcs[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])];
        push = std::min(push, a.residual());
        v = a.from;
      }
      for (int v = net.sink_; v != net.source_;) {
        const int id = via[static_cast<std::size_t>(v)];
        arcs[static_cast<std::size_t>(id)].flow += push;
        arcs[static_cast<std::size_t>(id ^ 1)].flow -= push;
        result.cost += push * arcs[static_cast<std::size_t>(id)].cost;
        v = arcs[static_cast<std::size_t>(id)].from;
      }
      result.flow += push;
    }
    net.potential_ = h;
    return result;
  }

 private:
  static void initial_potentials(const FlowNetwork& net, std::vector<Int>& h) {
    const auto n = h.size();
    std::vector<char> queued(n, 0);
    std::vector<std::size_t> relaxations(n, 0);
    std::deque<int> queue{net.source_};
    h[static_cast<std::size_t>(net.source_)] = 0;
    queued[static_cast<std::size_t>(net.source_)] = 1;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      queued[static_cast<std::size_t>(v)] = 0;
      for (int id : net.adj_[static_cast<std::size_t>(v)]) {
        const auto& a = net.arcs_[static_cast<std::size_t>(id)];
        if (a.residual() <= 0) continue;
        const auto w = static_cast<std::size_t>(a.to);
        const Int cand = h[static_cast<std::size_t>(v)] + a.cost;
        if (cand < h[w]) {
          h[w] = cand;
          if (++relaxations[w] > n)
            throw Error(ErrorKind::NetworkMalformed, "negative cycle");
          if (!queued[w]) {
            queued[w] = 1;
            queue.push_back(a.to);
          }
        }
      }
    }
  }
};

inline FlowResult mcmf_solve(FlowNetwork& net) { return McmfSolver::solve(net); }

}  // namespace capbandit
