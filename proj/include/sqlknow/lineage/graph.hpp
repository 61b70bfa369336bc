#pragma once

#include <string>
#include <vector>

#include "sqlknow/sql/units.hpp"

namespace sqlknow::lineage {

struct GraphNode {
  std::string id;        // unit id, or "table:<key>" for base tables
  std::string name;
  bool is_table = false;
  int unit_index = -1;   // index into DependencyGraph::units() for subquery nodes
};

struct GraphEdge {
  int from = 0;          // `to` reads `from`
  int to = 0;
};

// Immutable after construction; safe to share across threads.
class DependencyGraph {
 public:
  DependencyGraph() = default;

  const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
  const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
  const std::vector<sql::SubqueryUnit>& units() const noexcept { return units_; }

  int node_index(const std::string& id) const;  // -1 when absent
  const sql::SubqueryUnit& unit(const std::string& id) const;  // throws NotFoundError
  bool has_unit(const std::string& id) const;

  const std::vector<int>& successors(int node) const { return succ_[static_cast<std::size_t>(node)]; }
  const std::vector<int>& predecessors(int node) const { return pred_[static_cast<std::size_t>(node)]; }

  // Unit ids in dependency order, ties broken by definition order.
  const std::vector<std::string>& topo() const noexcept { return topo_; }

  // Transitive upstream units of `id` in topological order, excluding `id`.
  std::vector<const sql::SubqueryUnit*> closure(const std::string& id) const;

  friend DependencyGraph build_graph(std::vector<sql::SubqueryUnit> units);

 private:
  std::vector<sql::SubqueryUnit> units_;
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<int>> succ_;
  std::vector<std::vector<int>> pred_;
  std::vector<std::string> topo_;
};

// Throws DuplicateNameError, UnresolvedDependencyError, or CycleError.
DependencyGraph build_graph(std::vector<sql::SubqueryUnit> units);

std::vector<std::string> topo_order(const DependencyGraph& graph);
std::vector<std::string> affected_downstream(const DependencyGraph& graph, const std::string& unit_id);

}  // namespace sqlknow::lineage
