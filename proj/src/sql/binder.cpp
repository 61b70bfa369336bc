#include "sqlknow/sql/binder.hpp"

#include <algorithm>
#include <cctype>

#include "sqlknow/sql/render.hpp"
#include "sqlknow/sql/visit.hpp"

namespace sqlknow::sql {

void Catalog::add_table(const std::string& name, std::vector<OutputColumn> columns) {
  const auto key = ident_key(name);
  for (auto& c : columns) {
    if (c.origin_table.empty()) {
      c.origin_table = key;
      c.origin_column = c.name;
    }
  }
  tables_[key] = {name, std::move(columns)};
}

const std::vector<OutputColumn>* Catalog::find(std::string_view name) const {
  auto it = tables_.find(ident_key(name));
  return it == tables_.end() ? nullptr : &it->second.second;
}

std::vector<std::string> Catalog::table_names() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : tables_) out.push_back(entry.first);
  return out;
}

std::size_t Catalog::column_count() const {
  std::size_t n = 0;
  for (const auto& [key, entry] : tables_) n += entry.second.size();
  return n;
}

RelationLookup catalog_lookup(const Catalog* catalog) {
  return [catalog](const std::string& key) -> std::optional<std::vector<OutputColumn>> {
    if (!catalog) return std::nullopt;
    if (const auto* cols = catalog->find(key)) return *cols;
    return std::nullopt;
  };
}

namespace {

bool is_rowid(const std::string& key) { return key == "rowid" || key == "oid" || key == "_rowid_"; }

// Extends `outer` with the CTEs of a nested WITH clause, resolved in order.
RelationLookup scoped_lookup(const SelectStmt& stmt, const RelationLookup& outer) {
  if (!stmt.with) return outer;
  auto defs = std::make_shared<std::map<std::string, std::vector<OutputColumn>>>();
  RelationLookup scoped = [defs, outer](const std::string& key) -> std::optional<std::vector<OutputColumn>> {
    auto it = defs->find(key);
    if (it != defs->end()) return it->second;
    return outer ? outer(key) : std::nullopt;
  };
  for (const auto& cte : stmt.with->ctes) {
    auto cols = infer_output_columns(*cte.body, scoped);
    for (std::size_t i = 0; i < cte.columns.size() && i < cols.size(); ++i) cols[i].name = cte.columns[i].name();
    if (cols.empty() && !cte.columns.empty()) continue;
    (*defs)[cte.name.key()] = std::move(cols);
  }
  return scoped;
}

void bind_source(const FromSource& s, const RelationLookup& lookup, std::vector<SourceBinding>& out) {
  if (s.kind == FromSource::Kind::Group) {
    bind_source(s.group->first, lookup, out);
    for (const auto& j : s.group->joins) bind_source(j.source, lookup, out);
    return;
  }
  SourceBinding b;
  if (s.kind == FromSource::Kind::Table) {
    b.relation_key = s.name.back().key();
    b.alias_key = s.alias ? s.alias->key() : b.relation_key;
    if (auto cols = lookup ? lookup(b.relation_key) : std::nullopt) {
      b.known = true;
      b.columns = std::move(*cols);
    }
  } else if (s.kind == FromSource::Kind::Subquery) {
    b.alias_key = s.alias ? s.alias->key() : "";
    b.columns = infer_output_columns(*s.subquery, lookup);
    b.known = !b.columns.empty();
  } else {
    b.alias_key = s.alias ? s.alias->key() : s.name.back().key();
  }
  out.push_back(std::move(b));
}

const OutputColumn* find_column(const SourceBinding& s, const std::string& key) {
  for (const auto& c : s.columns) {
    if (ident_key(c.name) == key) return &c;
  }
  return nullptr;
}

const OutputColumn* resolve(const std::vector<Ident>& path, const std::vector<SourceBinding>& sources) {
  const auto col = path.back().key();
  if (path.size() >= 2) {
    const auto qual = path[path.size() - 2].key();
    for (const auto& s : sources) {
      if (s.alias_key == qual) return find_column(s, col);
    }
    return nullptr;
  }
  for (const auto& s : sources) {
    if (const auto* c = find_column(s, col)) return c;
  }
  return nullptr;
}

std::string numeric_type(const std::string& literal) {
  if (literal.empty()) return "";
  if (literal[0] == '\'') return "TEXT";
  if (literal[0] == 'X' || literal[0] == 'x') return "BLOB";
  if (std::isdigit(static_cast<unsigned char>(literal[0])) || literal[0] == '.') {
    if (literal.size() > 1 && (literal[1] == 'x' || literal[1] == 'X')) return "INTEGER";
    return literal.find_first_of(".eE") == std::string::npos ? "INTEGER" : "REAL";
  }
  if (literal == "TRUE" || literal == "FALSE") return "INTEGER";
  if (literal.rfind("CURRENT_", 0) == 0) return "TEXT";
  return "";
}

std::string infer_type(const Expr& e, const std::vector<SourceBinding>& sources) {
  switch (e.kind) {
    case ExprKind::Literal:
      return numeric_type(e.text);
    case ExprKind::Column: {
      const auto* c = resolve(e.path, sources);
      return c ? c->type : "";
    }
    case ExprKind::Cast:
      return e.text;
    case ExprKind::Paren:
    case ExprKind::Collate:
      return e.args.size() == 1 ? infer_type(e.args[0], sources) : "";
    case ExprKind::Unary:
      return e.op == "NOT" ? "INTEGER" : infer_type(e.args[0], sources);
    case ExprKind::Function: {
      const auto& f = e.text;
      if (f == "COUNT" || f == "LENGTH" || f == "INSTR" || f == "ROW_NUMBER" || f == "RANK" ||
          f == "DENSE_RANK" || f == "NTILE") {
        return "INTEGER";
      }
      if (f == "AVG" || f == "TOTAL" || f == "ROUND" || f == "PERCENT_RANK" || f == "CUME_DIST") return "REAL";
      if (f == "SUM" || f == "MIN" || f == "MAX" || f == "ABS" || f == "COALESCE" || f == "IFNULL") {
        return e.args.empty() ? "" : infer_type(e.args[0], sources);
      }
      if (f == "UPPER" || f == "LOWER" || f == "SUBSTR" || f == "SUBSTRING" || f == "TRIM" || f == "REPLACE" ||
          f == "GROUP_CONCAT" || f == "STRFTIME" || f == "DATE" || f == "TIME" || f == "DATETIME" ||
          f == "PRINTF" || f == "TYPEOF") {
        return "TEXT";
      }
      return "";
    }
    case ExprKind::Binary: {
      const auto& op = e.op;
      if (op == "||") return "TEXT";
      if (op == "+" || op == "-" || op == "*" || op == "/" || op == "%") {
        auto a = infer_type(e.args[0], sources);
        auto b = infer_type(e.args[1], sources);
        if (a == "REAL" || b == "REAL") return "REAL";
        if (a == "INTEGER" && b == "INTEGER") return "INTEGER";
        return "";
      }
      if (op == "->" || op == "->>") return "";
      return "INTEGER";
    }
    case ExprKind::Between:
    case ExprKind::In:
    case ExprKind::Like:
    case ExprKind::Postfix:
    case ExprKind::Exists:
      return "INTEGER";
    case ExprKind::Case:
      return e.args.size() >= 2 ? infer_type(e.args[e.has_operand ? 2 : 1], sources) : "";
    default:
      return "";
  }
}

std::set<std::string> producer_aliases(const std::vector<SourceBinding>& sources, const std::string& producer_key) {
  std::set<std::string> out;
  for (const auto& s : sources) {
    if (s.relation_key == producer_key) out.insert(s.alias_key);
  }
  return out;
}

// True when an unqualified `key` belongs to the producer rather than another known source.
bool owned_by_producer(const std::string& key, const std::vector<SourceBinding>& sources,
                       const std::string& producer_key) {
  bool in_producer = false;
  for (const auto& s : sources) {
    if (!find_column(s, key)) continue;
    if (s.relation_key == producer_key) {
      in_producer = true;
    } else {
      return false;
    }
  }
  return in_producer;
}

template <class Stmt, class Fn>
void for_each_core_with_sources(Stmt& stmt, const RelationLookup& lookup, Fn&& fn) {
  // Nested scopes are resolved against the outer lookup; shadowing of the
  // producer name by a nested CTE is honoured through scoped_lookup.
  for_each_stmt_mut(const_cast<SelectStmt&>(static_cast<const SelectStmt&>(stmt)), [&](SelectStmt& s) {
    auto scoped = scoped_lookup(s, lookup);
    for (std::size_t i = 0; i < s.cores.size(); ++i) {
      auto sources = bind_sources(s.cores[i], scoped);
      fn(s, s.cores[i], i, sources);
    }
  });
}

void collect_join_using(FromClause& from, std::vector<std::vector<Ident>*>& out) {
  auto source = [&](FromSource& s) {
    if (s.group) collect_join_using(*s.group, out);
  };
  source(from.first);
  for (auto& j : from.joins) {
    source(j.source);
    if (!j.using_columns.empty()) out.push_back(&j.using_columns);
  }
}

bool needs_paren(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Binary:
    case ExprKind::Between:
    case ExprKind::In:
    case ExprKind::Like:
    case ExprKind::Postfix:
    case ExprKind::Unary:
    case ExprKind::Collate:
      return true;
    default:
      return false;
  }
}

void substitute_into(Expr& e, const std::map<std::string, const Expr*>& aliases) {
  if (e.kind == ExprKind::Column && e.path.size() == 1) {
    auto it = aliases.find(e.path[0].key());
    if (it != aliases.end()) {
      Expr replacement = *it->second;
      e = needs_paren(replacement) ? make_paren(std::move(replacement)) : std::move(replacement);
      return;
    }
  }
  for (auto& a : e.args) substitute_into(a, aliases);
  if (e.filter) substitute_into(*e.filter, aliases);
}

}  // namespace

std::vector<SourceBinding> bind_sources(const SelectCore& core, const RelationLookup& lookup) {
  std::vector<SourceBinding> out;
  if (!core.from) return out;
  bind_source(core.from->first, lookup, out);
  for (const auto& j : core.from->joins) bind_source(j.source, lookup, out);
  return out;
}

std::string result_column_name(const ResultColumn& rc) {
  if (rc.alias) return rc.alias->name();
  if (rc.expr.kind == ExprKind::Column) return rc.expr.path.back().name();
  return render_expr(rc.expr);
}

std::vector<OutputColumn> infer_output_columns(const SelectStmt& stmt, const RelationLookup& lookup) {
  std::vector<OutputColumn> out;
  if (stmt.cores.empty()) return out;
  auto scoped = scoped_lookup(stmt, lookup);
  const auto& core = stmt.cores.front();
  if (!core.values.empty()) {
    for (std::size_t i = 0; i < core.values.front().size(); ++i) {
      out.push_back({"column" + std::to_string(i + 1), "", "", ""});
    }
    return out;
  }
  auto sources = bind_sources(core, scoped);
  for (const auto& rc : core.columns) {
    if (rc.expr.kind == ExprKind::Star) {
      for (const auto& s : sources) {
        if (!rc.expr.path.empty() && s.alias_key != rc.expr.path.back().key()) continue;
        out.insert(out.end(), s.columns.begin(), s.columns.end());
      }
      continue;
    }
    OutputColumn col;
    col.name = result_column_name(rc);
    col.type = infer_type(rc.expr, sources);
    if (rc.expr.kind == ExprKind::Column) {
      if (const auto* src = resolve(rc.expr.path, sources)) {
        col.origin_table = src->origin_table;
        col.origin_column = src->origin_column;
      }
    }
    out.push_back(std::move(col));
  }
  return out;
}

std::vector<std::string> unresolved_columns(const SelectStmt& stmt, const RelationLookup& lookup) {
  std::vector<std::string> out;
  auto scoped = scoped_lookup(stmt, lookup);
  for (std::size_t ci = 0; ci < stmt.cores.size(); ++ci) {
    const auto& core = stmt.cores[ci];
    auto sources = bind_sources(core, scoped);
    const bool all_known = std::all_of(sources.begin(), sources.end(), [](const auto& s) { return s.known; });
    std::set<std::string> aliases;
    for (const auto& rc : core.columns) {
      if (rc.alias) aliases.insert(rc.alias->key());
    }
    auto check = [&](const Expr& top, bool allow_alias) {
      walk_expr(top, [&](const Expr& e) {
        if (e.kind != ExprKind::Column) return;
        const auto key = e.path.back().key();
        if (is_rowid(key) && e.path.size() == 1) return;
        if (e.path.size() >= 2) {
          const auto qual = e.path[e.path.size() - 2].key();
          const SourceBinding* src = nullptr;
          for (const auto& s : sources) {
            if (s.alias_key == qual) src = &s;
          }
          if (!src) {
            out.push_back(render_expr(e));
            return;
          }
          if (src->known && !find_column(*src, key) && !is_rowid(key)) out.push_back(render_expr(e));
          return;
        }
        if (resolve(e.path, sources)) return;
        if (allow_alias && aliases.count(key)) return;
        if (all_known) out.push_back(render_expr(e));
      });
    };
    for (const auto& rc : core.columns) {
      if (rc.expr.kind != ExprKind::Star) check(rc.expr, false);
    }
    if (core.from) {
      detail::for_each_from_expr(*core.from, [&](const Expr& e) { check(e, false); });
    }
    if (core.where) check(*core.where, true);
    for (const auto& g : core.group_by) check(g, true);
    if (core.having) check(*core.having, true);
    if (ci == 0 && stmt.cores.size() == 1) {
      for (const auto& o : stmt.order_by) check(o.expr, true);
    }
  }
  return out;
}

std::set<std::string> referenced_columns(const SelectStmt& consumer, const std::string& producer_key,
                                         const std::vector<OutputColumn>& producer_columns,
                                         const RelationLookup& lookup) {
  std::set<std::string> out;
  std::set<std::string> producer_keys;
  for (const auto& c : producer_columns) producer_keys.insert(ident_key(c.name));
  for_each_core_with_sources(consumer, lookup, [&](SelectStmt& s, SelectCore& core, std::size_t ci,
                                                   const std::vector<SourceBinding>& sources) {
    auto aliases = producer_aliases(sources, producer_key);
    if (aliases.empty()) return;
    auto visit = [&](const Expr& top) {
      walk_expr(top, [&](const Expr& e) {
        if (e.kind == ExprKind::Star) {
          if (e.path.empty() || aliases.count(e.path.back().key())) out.insert(producer_keys.begin(), producer_keys.end());
          return;
        }
        if (e.kind != ExprKind::Column) return;
        const auto key = e.path.back().key();
        if (!producer_keys.count(key)) return;
        if (e.path.size() >= 2) {
          if (aliases.count(e.path[e.path.size() - 2].key())) out.insert(key);
        } else if (owned_by_producer(key, sources, producer_key)) {
          out.insert(key);
        }
      });
    };
    for (const auto& rc : core.columns) {
      if (rc.expr.kind == ExprKind::Star) {
        if (rc.expr.path.empty() || aliases.count(rc.expr.path.back().key())) {
          out.insert(producer_keys.begin(), producer_keys.end());
        }
      }
    }
    for_each_core_expr(core, visit);
    if (ci == 0 && s.cores.size() == 1) {
      for (const auto& o : s.order_by) visit(o.expr);
    }
    if (core.from) {
      std::vector<std::vector<Ident>*> usings;
      collect_join_using(*core.from, usings);
      for (auto* u : usings) {
        for (const auto& id : *u) {
          if (producer_keys.count(id.key())) out.insert(id.key());
        }
      }
    }
  });
  return out;
}

bool rename_column_references(SelectStmt& consumer, const std::string& producer_key,
                              const std::vector<OutputColumn>& producer_columns,
                              const std::map<std::string, std::string>& renames, const RelationLookup& lookup) {
  bool changed = false;
  for_each_core_with_sources(consumer, lookup, [&](SelectStmt& s, SelectCore& core, std::size_t ci,
                                                   const std::vector<SourceBinding>& sources) {
    auto aliases = producer_aliases(sources, producer_key);
    if (aliases.empty()) return;
    (void)producer_columns;
    auto visit = [&](Expr& top) {
      walk_expr_mut(top, [&](Expr& e) {
        if (e.kind != ExprKind::Column) return;
        const auto key = e.path.back().key();
        auto it = renames.find(key);
        if (it == renames.end()) return;
        bool mine = e.path.size() >= 2 ? aliases.count(e.path[e.path.size() - 2].key()) > 0
                                       : owned_by_producer(key, sources, producer_key);
        if (!mine) return;
        e.path.back().text = quote_ident_if_needed(it->second);
        changed = true;
      });
    };
    detail::for_each_core_expr_impl(core, visit);
    if (ci == 0 && s.cores.size() == 1) {
      for (auto& o : s.order_by) visit(o.expr);
    }
    if (core.from) {
      std::vector<std::vector<Ident>*> usings;
      collect_join_using(*core.from, usings);
      for (auto* u : usings) {
        for (auto& id : *u) {
          auto it = renames.find(id.key());
          if (it != renames.end()) {
            id.text = quote_ident_if_needed(it->second);
            changed = true;
          }
        }
      }
    }
  });
  return changed;
}

Expr substitute_aliases(const Expr& e, const SelectCore& core) {
  std::map<std::string, const Expr*> aliases;
  for (const auto& rc : core.columns) {
    if (!rc.alias || rc.expr.kind == ExprKind::Star) continue;
    const auto key = rc.alias->key();
    if (rc.expr.kind == ExprKind::Column && rc.expr.path.back().key() == key) continue;
    aliases.emplace(key, &rc.expr);
  }
  Expr out = e;
  if (!aliases.empty()) substitute_into(out, aliases);
  return out;
}

}  // namespace sqlknow::sql
