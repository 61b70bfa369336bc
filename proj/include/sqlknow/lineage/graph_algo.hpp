#pragma once

// Graph kernels shared by DependencyGraph and the exhaustive tests. A graph is
// given by its node count and a successor enumerator `succ(v, visit)`.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

namespace sqlknow::lineage::algo {

// Kahn's algorithm; among ready nodes the smallest index goes first, which
// yields the lexicographically smallest topological order. nullopt on a cycle.
template <class Succ>
std::optional<std::vector<int>> topo_sort(int n, Succ&& succ) {
  std::vector<int> indegree(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v) succ(v, [&](int w) { ++indegree[static_cast<std::size_t>(w)]; });
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 0; v < n; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) ready.push(v);
  }
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    succ(v, [&](int w) {
      if (--indegree[static_cast<std::size_t>(w)] == 0) ready.push(w);
    });
  }
  if (static_cast<int>(order.size()) != n) return std::nullopt;
  return order;
}

// One directed cycle as a node sequence (first node not repeated); empty when acyclic.
template <class Succ>
std::vector<int> find_cycle(int n, Succ&& succ) {
  std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 new, 1 on stack, 2 done
  std::vector<int> stack;
  std::vector<int> found;
  std::function<bool(int)> dfs = [&](int v) {
    state[static_cast<std::size_t>(v)] = 1;
    stack.push_back(v);
    bool hit = false;
    succ(v, [&](int w) {
      if (hit) return;
      if (state[static_cast<std::size_t>(w)] == 1) {
        auto it = std::find(stack.begin(), stack.end(), w);
        found.assign(it, stack.end());
        hit = true;
      } else if (state[static_cast<std::size_t>(w)] == 0 && dfs(w)) {
        hit = true;
      }
    });
    if (hit) return true;
    stack.pop_back();
    state[static_cast<std::size_t>(v)] = 2;
    return false;
  };
  for (int v = 0; v < n; ++v) {
    if (state[static_cast<std::size_t>(v)] == 0 && dfs(v)) return found;
  }
  return {};
}

// Nodes reachable from `source` by one or more edges, as a membership vector.
template <class Succ>
std::vector<bool> reachable(int n, int source, Succ&& succ) {
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<int> frontier{source};
  while (!frontier.empty()) {
    const int v = frontier.back();
    frontier.pop_back();
    succ(v, [&](int w) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        frontier.push_back(w);
      }
    });
  }
  return seen;
}

// Reachable nodes listed in topological order, excluding `source` itself.
template <class Succ>
std::vector<int> downstream(int n, int source, const std::vector<int>& topo, Succ&& succ) {
  const auto seen = reachable(n, source, succ);
  std::vector<int> out;
  for (int v : topo) {
    if (v != source && seen[static_cast<std::size_t>(v)]) out.push_back(v);
  }
  return out;
}

}  // namespace sqlknow::lineage::algo
