#include "sqlknow/sql/units.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sqlknow/errors.hpp"
#include "sqlknow/sql/parser.hpp"
#include "sqlknow/sql/render.hpp"
#include "sqlknow/sql/visit.hpp"

namespace sqlknow::sql {
namespace {

struct Refs {
  std::vector<std::string> tables;
  std::vector<std::string> ctes;
  bool self = false;

  static void add(std::vector<std::string>& v, const std::string& key) {
    if (std::find(v.begin(), v.end(), key) == v.end()) v.push_back(key);
  }
};

struct RefCollector {
  const std::set<std::string>& top;
  const std::string& self;
  Refs& refs;

  void stmt(const SelectStmt& s, std::set<std::string> scope) {
    if (s.with) {
      for (const auto& c : s.with->ctes) scope.insert(c.name.key());
      for (const auto& c : s.with->ctes) stmt(*c.body, scope);
    }
    for (const auto& core : s.cores) {
      if (core.from) from(*core.from, scope);
      for_each_core_expr(core, [&](const Expr& e) { expr(e, scope); });
    }
    for (const auto& o : s.order_by) expr(o.expr, scope);
    if (s.limit) expr(*s.limit, scope);
    if (s.offset) expr(*s.offset, scope);
  }

  void expr(const Expr& top_expr, const std::set<std::string>& scope) {
    walk_expr(top_expr, [&](const Expr& e) {
      if (e.subquery) stmt(*e.subquery, scope);
    });
  }

  void from(const FromClause& f, const std::set<std::string>& scope) {
    source(f.first, scope);
    for (const auto& j : f.joins) source(j.source, scope);
  }

  void source(const FromSource& s, const std::set<std::string>& scope) {
    switch (s.kind) {
      case FromSource::Kind::Table: {
        const auto key = s.name.back().key();
        if (s.name.size() > 1) {
          Refs::add(refs.tables, key);
        } else if (scope.count(key)) {
          return;
        } else if (top.count(key)) {
          if (key != self) {
            Refs::add(refs.ctes, key);
          } else {
            refs.self = true;
          }
        } else {
          Refs::add(refs.tables, key);
        }
        return;
      }
      case FromSource::Kind::Subquery:
        stmt(*s.subquery, scope);
        return;
      case FromSource::Kind::Group:
        from(*s.group, scope);
        return;
      case FromSource::Kind::TableFunction:
        return;
    }
  }
};

Refs collect_refs(const SelectStmt& body, const std::set<std::string>& top, const std::string& self) {
  Refs refs;
  RefCollector c{top, self, refs};
  c.stmt(body, {});
  return refs;
}

class Hoister {
 public:
  explicit Hoister(std::set<std::string> taken) : taken_(std::move(taken)) {}

  void stmt(SelectStmt& s, std::vector<Cte>& out) {
    for (auto& core : s.cores) {
      if (core.from) from(*core.from, out);
    }
  }

 private:
  std::set<std::string> taken_;
  int counter_ = 0;

  void from(FromClause& f, std::vector<Cte>& out) {
    source(f.first, out);
    for (auto& j : f.joins) source(j.source, out);
  }

  void source(FromSource& src, std::vector<Cte>& out) {
    if (src.kind == FromSource::Kind::Group) {
      from(*src.group, out);
      return;
    }
    if (src.kind != FromSource::Kind::Subquery) return;
    SelectStmt body = std::move(*src.subquery);
    if (!body.with) stmt(body, out);
    std::string name;
    do {
      name = "__sub_" + std::to_string(++counter_);
    } while (taken_.count(name));
    taken_.insert(name);
    Cte cte;
    cte.name = Ident{name, {}};
    cte.body = Box<SelectStmt>(std::move(body));
    out.push_back(std::move(cte));
    src.kind = FromSource::Kind::Table;
    src.subquery = {};
    src.name = {Ident{name, {}}};
  }
};

// Returns true when any derived table was hoisted.
bool hoist_derived_tables(SelectStmt& root) {
  std::set<std::string> taken;
  if (root.with) {
    for (const auto& c : root.with->ctes) taken.insert(c.name.key());
  }
  Hoister hoister(taken);
  std::vector<Cte> ctes;
  bool changed = false;
  if (root.with) {
    for (auto& c : root.with->ctes) {
      std::vector<Cte> fresh;
      if (!c.body->with) hoister.stmt(*c.body, fresh);
      changed = changed || !fresh.empty();
      for (auto& f : fresh) ctes.push_back(std::move(f));
      ctes.push_back(std::move(c));
    }
  }
  std::vector<Cte> fresh;
  hoister.stmt(root, fresh);
  changed = changed || !fresh.empty();
  for (auto& f : fresh) ctes.push_back(std::move(f));
  if (!changed) {
    if (root.with) root.with->ctes = std::move(ctes);
    return false;
  }
  if (!root.with) root.with = WithClause{};
  root.with->ctes = std::move(ctes);
  return true;
}

void compute_outputs(std::vector<SubqueryUnit>& units, const Catalog* catalog) {
  for (std::size_t pass = 0; pass <= units.size(); ++pass) {
    bool changed = false;
    auto lookup = units_lookup(units, catalog);
    for (auto& u : units) {
      auto cols = infer_output_columns(u.ast, lookup);
      for (std::size_t i = 0; i < u.cte_columns.size() && i < cols.size(); ++i) cols[i].name = u.cte_columns[i];
      bool same = cols.size() == u.output_columns.size();
      for (std::size_t i = 0; same && i < cols.size(); ++i) {
        same = cols[i].name == u.output_columns[i].name && cols[i].type == u.output_columns[i].type &&
               cols[i].origin_table == u.output_columns[i].origin_table;
      }
      if (!same) {
        u.output_columns = std::move(cols);
        changed = true;
      }
    }
    if (!changed) break;
  }
}

}  // namespace

SubqueryUnit make_unit(std::string name, const SelectStmt& body, const std::vector<std::string>& cte_names) {
  SubqueryUnit u;
  u.id = ident_key(name);
  u.name = std::move(name);
  u.sql_text = render(body);
  u.ast = parse_select(u.sql_text);
  std::set<std::string> top(cte_names.begin(), cte_names.end());
  auto refs = collect_refs(u.ast, top, u.id);
  u.referenced_tables = std::move(refs.tables);
  u.referenced_ctes = std::move(refs.ctes);
  u.self_referencing = refs.self;
  return u;
}

void refresh_unit(SubqueryUnit& unit, const std::vector<std::string>& cte_names, const RelationLookup& lookup) {
  unit.sql_text = render(unit.ast);
  unit.ast = parse_select(unit.sql_text);
  std::set<std::string> top(cte_names.begin(), cte_names.end());
  auto refs = collect_refs(unit.ast, top, unit.id);
  unit.referenced_tables = std::move(refs.tables);
  unit.referenced_ctes = std::move(refs.ctes);
  unit.self_referencing = refs.self;
  auto cols = infer_output_columns(unit.ast, lookup);
  for (std::size_t i = 0; i < unit.cte_columns.size() && i < cols.size(); ++i) cols[i].name = unit.cte_columns[i];
  unit.output_columns = std::move(cols);
}

Decomposition decompose_script(const ScriptAst& script, const Catalog* catalog) {
  Decomposition d;
  SelectStmt root = script.root;
  if (root.with) {
    std::set<std::string> seen;
    for (const auto& c : root.with->ctes) {
      const auto key = c.name.key();
      if (key == kMainUnit || !seen.insert(key).second) throw DuplicateNameError(c.name.name());
    }
  }
  if (hoist_derived_tables(root)) {
    d.script = normalize(root);
    d.script.original_text = script.original_text;
  } else {
    d.script = script;
  }
  const auto& r = d.script.root;
  std::vector<std::string> names;
  if (r.with) {
    for (const auto& c : r.with->ctes) names.push_back(c.name.key());
  }
  if (r.with) {
    for (const auto& c : r.with->ctes) {
      auto u = make_unit(c.name.name(), *c.body, names);
      u.index = d.units.size();
      u.script_span = c.body_span;
      for (const auto& col : c.columns) u.cte_columns.push_back(col.name());
      u.materialized = c.materialized;
      u.recursive = r.with->recursive;
      d.units.push_back(std::move(u));
    }
  }
  SelectStmt main_body = r;
  main_body.with.reset();
  auto main = make_unit(kMainUnit, main_body, names);
  main.index = d.units.size();
  main.script_span = r.body_span;
  d.units.push_back(std::move(main));
  compute_outputs(d.units, catalog);
  return d;
}

std::vector<SubqueryUnit> decompose(const ScriptAst& script, const Catalog* catalog) {
  return decompose_script(script, catalog).units;
}

RelationLookup units_lookup(const std::vector<SubqueryUnit>& units, const Catalog* catalog) {
  auto defs = std::make_shared<std::map<std::string, std::vector<OutputColumn>>>();
  for (const auto& u : units) {
    if (!u.is_main() && !u.output_columns.empty()) (*defs)[u.id] = u.output_columns;
  }
  return [defs, catalog](const std::string& key) -> std::optional<std::vector<OutputColumn>> {
    auto it = defs->find(key);
    if (it != defs->end()) return it->second;
    if (catalog) {
      if (const auto* cols = catalog->find(key)) return *cols;
    }
    return std::nullopt;
  };
}

SelectStmt executable_statement(const SubqueryUnit& unit, const std::vector<const SubqueryUnit*>& deps) {
  if (!unit.self_referencing) return with_dependencies(unit.ast, deps);
  auto all = deps;
  all.push_back(&unit);
  return with_dependencies(parse_select("SELECT * FROM " + quote_ident_if_needed(unit.name)), all);
}

Cte unit_cte(const SubqueryUnit& unit) {
  Cte c;
  c.name = Ident{quote_ident_if_needed(unit.name), {}};
  for (const auto& col : unit.cte_columns) c.columns.push_back(Ident{quote_ident_if_needed(col), {}});
  c.materialized = unit.materialized;
  c.body = Box<SelectStmt>(unit.ast);
  return c;
}

ScriptAst compose_script(const std::vector<SubqueryUnit>& units) {
  const SubqueryUnit* main = nullptr;
  std::vector<const SubqueryUnit*> ctes;
  for (const auto& u : units) {
    if (u.is_main()) {
      main = &u;
    } else {
      ctes.push_back(&u);
    }
  }
  if (!main) throw ValidationError("script has no main query");
  return normalize(with_dependencies(main->ast, ctes));
}

SelectStmt with_dependencies(const SelectStmt& body, const std::vector<const SubqueryUnit*>& deps) {
  SelectStmt out = body;
  if (deps.empty()) return out;
  WithClause w;
  for (const auto* d : deps) {
    w.recursive = w.recursive || d->recursive;
    w.ctes.push_back(unit_cte(*d));
  }
  if (out.with) {
    w.recursive = w.recursive || out.with->recursive;
    for (auto& c : out.with->ctes) w.ctes.push_back(std::move(c));
  }
  out.with = std::move(w);
  return out;
}

}  // namespace sqlknow::sql
