#include <algorithm>
#include <set>

#include "sqlknow/errors.hpp"
#include "sqlknow/knowledge/dictionary.hpp"
#include "sqlknow/sql/units.hpp"
#include "sqlknow/sql/visit.hpp"

namespace sqlknow::knowledge {
namespace {

using Key = std::pair<std::string, std::string>;

struct Tally {
  std::map<std::string, std::pair<int, int>> counts;  // alias -> (count, first seen)
};

std::optional<Key> resolve(const sql::Expr& e, const std::vector<sql::SourceBinding>& bindings,
                           const std::set<std::string>& unit_ids, bool have_catalog) {
  if (e.kind != sql::ExprKind::Column || e.path.empty()) return std::nullopt;
  const auto column = e.path.back().key();
  auto via = [&](const sql::SourceBinding& b) -> std::optional<Key> {
    if (b.known) {
      for (const auto& c : b.columns) {
        if (sql::ident_key(c.name) == column && !c.origin_table.empty()) return Key{c.origin_table, sql::ident_key(c.origin_column)};
      }
      return std::nullopt;
    }
    if (have_catalog || b.relation_key.empty() || unit_ids.count(b.relation_key)) return std::nullopt;
    return Key{b.relation_key, column};
  };
  if (e.path.size() >= 2) {
    const auto qualifier = e.path[e.path.size() - 2].key();
    for (const auto& b : bindings) {
      if (b.alias_key == qualifier) return via(b);
    }
    return std::nullopt;
  }
  const sql::SourceBinding* owner = nullptr;
  int owners = 0;
  for (const auto& b : bindings) {
    if (b.known && std::any_of(b.columns.begin(), b.columns.end(), [&](const auto& c) { return sql::ident_key(c.name) == column; })) {
      owner = &b;
      ++owners;
    }
  }
  if (owners == 1) return via(*owner);
  if (owners == 0 && bindings.size() == 1) return via(bindings.front());
  return std::nullopt;
}

}  // namespace

AliasMining mine_aliases(const std::vector<std::string>& scripts, const sql::Catalog* catalog) {
  AliasMining out;
  std::map<Key, Tally> tallies;
  int seen = 0;
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    std::vector<sql::SubqueryUnit> units;
    try {
      units = sql::decompose(sql::parse_script(scripts[i]), catalog);
    } catch (const Error& e) {
      out.skipped.push_back({i, e.what()});
      continue;
    }
    std::set<std::string> unit_ids;
    for (const auto& u : units) unit_ids.insert(u.id);
    const auto lookup = sql::units_lookup(units, catalog);
    for (const auto& u : units) {
      sql::for_each_stmt(u.ast, [&](const sql::SelectStmt& stmt) {
        for (const auto& core : stmt.cores) {
          std::optional<std::vector<sql::SourceBinding>> bindings;
          for (const auto& rc : core.columns) {
            if (!rc.alias) continue;
            const auto alias = rc.alias->name();
            if (rc.expr.kind != sql::ExprKind::Column || sql::ident_key(alias) == rc.expr.path.back().key()) continue;
            if (!bindings) bindings = sql::bind_sources(core, lookup);
            const auto key = resolve(rc.expr, *bindings, unit_ids, catalog != nullptr);
            if (!key) continue;
            auto& slot = tallies[*key].counts[alias];
            if (slot.first++ == 0) slot.second = seen++;
          }
        }
      });
    }
  }
  for (auto& [key, tally] : tallies) {
    std::vector<std::pair<std::string, std::pair<int, int>>> rows(tally.counts.begin(), tally.counts.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      if (a.second.first != b.second.first) return a.second.first > b.second.first;
      return a.second.second < b.second.second;
    });
    auto& list = out.aliases[key];
    for (const auto& r : rows) list.push_back(r.first);
  }
  return out;
}

}  // namespace sqlknow::knowledge
