#include "sqlknow/lineage/graph.hpp"

#include <map>
#include <set>

#include "sqlknow/errors.hpp"
#include "sqlknow/lineage/graph_algo.hpp"

namespace sqlknow::lineage {

int DependencyGraph::node_index(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

bool DependencyGraph::has_unit(const std::string& id) const {
  const int i = node_index(id);
  return i >= 0 && !nodes_[static_cast<std::size_t>(i)].is_table;
}

const sql::SubqueryUnit& DependencyGraph::unit(const std::string& id) const {
  const int i = node_index(id);
  if (i < 0 || nodes_[static_cast<std::size_t>(i)].is_table) throw NotFoundError("unknown subquery: " + id);
  return units_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(i)].unit_index)];
}

std::vector<const sql::SubqueryUnit*> DependencyGraph::closure(const std::string& id) const {
  const int target = node_index(id);
  if (target < 0) throw NotFoundError("unknown subquery: " + id);
  std::set<int> upstream;
  std::vector<int> frontier{target};
  while (!frontier.empty()) {
    const int v = frontier.back();
    frontier.pop_back();
    for (int p : predecessors(v)) {
      if (!nodes_[static_cast<std::size_t>(p)].is_table && upstream.insert(p).second) frontier.push_back(p);
    }
  }
  std::vector<const sql::SubqueryUnit*> out;
  for (const auto& uid : topo_) {
    const int i = node_index(uid);
    if (upstream.count(i)) out.push_back(&units_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(i)].unit_index)]);
  }
  return out;
}

DependencyGraph build_graph(std::vector<sql::SubqueryUnit> units) {
  DependencyGraph g;
  g.units_ = std::move(units);
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < g.units_.size(); ++i) {
    const auto& u = g.units_[i];
    if (!index.emplace(u.id, static_cast<int>(g.nodes_.size())).second) throw DuplicateNameError(u.name);
    g.nodes_.push_back({u.id, u.name, false, static_cast<int>(i)});
  }
  auto table_node = [&](const std::string& key) {
    const auto id = "table:" + key;
    auto it = index.find(id);
    if (it != index.end()) return it->second;
    const int n = static_cast<int>(g.nodes_.size());
    g.nodes_.push_back({id, key, true, -1});
    index.emplace(id, n);
    return n;
  };
  for (std::size_t i = 0; i < g.units_.size(); ++i) {
    const auto& u = g.units_[i];
    const int to = index.at(u.id);
    for (const auto& t : u.referenced_tables) g.edges_.push_back({table_node(t), to});
    for (const auto& c : u.referenced_ctes) {
      auto it = index.find(c);
      if (it == index.end()) throw UnresolvedDependencyError(c);
      g.edges_.push_back({it->second, to});
    }
  }
  const auto n = g.nodes_.size();
  g.succ_.assign(n, {});
  g.pred_.assign(n, {});
  for (const auto& e : g.edges_) {
    g.succ_[static_cast<std::size_t>(e.from)].push_back(e.to);
    g.pred_[static_cast<std::size_t>(e.to)].push_back(e.from);
  }

  // Subquery nodes come first in `nodes_`, so their indices equal definition order.
  const int m = static_cast<int>(g.units_.size());
  auto succ = [&](int v, auto&& visit) {
    for (int w : g.succ_[static_cast<std::size_t>(v)]) {
      if (w < m) visit(w);
    }
  };
  auto order = algo::topo_sort(m, succ);
  if (!order) {
    std::vector<std::string> names;
    for (int v : algo::find_cycle(m, succ)) names.push_back(g.nodes_[static_cast<std::size_t>(v)].name);
    throw CycleError(std::move(names));
  }
  for (int v : *order) g.topo_.push_back(g.nodes_[static_cast<std::size_t>(v)].id);
  return g;
}

std::vector<std::string> topo_order(const DependencyGraph& graph) { return graph.topo(); }

std::vector<std::string> affected_downstream(const DependencyGraph& graph, const std::string& unit_id) {
  const int source = graph.node_index(unit_id);
  if (source < 0) throw NotFoundError("unknown subquery: " + unit_id);
  const int n = static_cast<int>(graph.nodes().size());
  std::vector<int> topo;
  for (const auto& id : graph.topo()) topo.push_back(graph.node_index(id));
  auto succ = [&](int v, auto&& visit) {
    for (int w : graph.successors(v)) visit(w);
  };
  std::vector<std::string> out;
  for (int v : algo::downstream(n, source, topo, succ)) out.push_back(graph.nodes()[static_cast<std::size_t>(v)].id);
  return out;
}

}  // namespace sqlknow::lineage
