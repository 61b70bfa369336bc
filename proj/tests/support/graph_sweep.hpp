#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sqlknow::testing {

struct GraphSweepLevel {
  int nodes = 0;
  std::string family;           // "all-labeled" or "all-shapes"
  std::uint64_t graphs = 0;     // graphs checked, cyclic ones included
  std::uint64_t dags = 0;
  std::uint64_t failures = 0;
  double seconds = 0;
};

struct GraphSweepResult {
  std::vector<GraphSweepLevel> levels;
  std::vector<std::string> first_failures;
  bool complete = true;          // false when the time budget cut the sweep short
  double seconds = 0;

  bool ok() const {
    for (const auto& l : levels) {
      if (l.failures) return false;
    }
    return first_failures.empty();
  }
};

// Checks topo_sort, find_cycle, and downstream against bitmask oracles.
//   n <= labeled_max: every directed graph without self-loops or 2-cycles
//     (cycles included; topo_sort must reject exactly the cyclic ones).
//   labeled_max < n <= max_n: every upper-triangular DAG, i.e. every DAG shape,
//     with node labels shuffled by a per-graph permutation.
// Lexicographic minimality of topo_sort is checked against all permutations
// for n <= 5 and against the greedy characterization above that.
GraphSweepResult sweep_graphs(int labeled_max, int max_n, double budget_seconds);

}  // namespace sqlknow::testing
