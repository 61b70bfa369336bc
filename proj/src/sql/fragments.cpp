#include "sqlknow/sql/fragments.hpp"

#include <algorithm>
#include <map>

#include "sqlknow/errors.hpp"
#include "sqlknow/sql/parser.hpp"
#include "sqlknow/sql/render.hpp"

namespace sqlknow::sql {

const char* to_string(KnowledgeKind k) {
  switch (k) {
    case KnowledgeKind::Calculation: return "Calculation";
    case KnowledgeKind::Condition: return "Condition";
    case KnowledgeKind::Relation: return "Relation";
    case KnowledgeKind::Dimension: return "Dimension";
    case KnowledgeKind::Output: return "Output";
  }
  return "";
}

const char* to_string(Clause c) {
  switch (c) {
    case Clause::Select: return "Select";
    case Clause::Where: return "Where";
    case Clause::Having: return "Having";
    case Clause::FromJoin: return "FromJoin";
    case Clause::GroupBy: return "GroupBy";
    case Clause::OrderByLimitDistinct: return "OrderByLimitDistinct";
  }
  return "";
}

KnowledgeKind parse_kind(std::string_view s) {
  for (auto k : {KnowledgeKind::Calculation, KnowledgeKind::Condition, KnowledgeKind::Relation,
                 KnowledgeKind::Dimension, KnowledgeKind::Output}) {
    if (s == to_string(k)) return k;
  }
  throw ValidationError("unknown knowledge kind: " + std::string(s));
}

Clause parse_clause(std::string_view s) {
  for (auto c : {Clause::Select, Clause::Where, Clause::Having, Clause::FromJoin, Clause::GroupBy,
                 Clause::OrderByLimitDistinct}) {
    if (s == to_string(c)) return c;
  }
  throw ValidationError("unknown clause: " + std::string(s));
}

namespace {

bool is_simple_order_expr(const Expr& e) {
  return e.kind == ExprKind::Column || e.kind == ExprKind::Literal;
}

}  // namespace

std::vector<Fragment> extract_fragments(const SubqueryUnit& unit) {
  std::vector<Fragment> out;
  const auto& stmt = unit.ast;
  auto add = [&](std::string slot, KnowledgeKind kind, Clause clause, std::string sql, Span span, std::size_t core,
                 std::size_t ordinal) {
    Fragment f;
    f.id = unit.id + "/" + std::move(slot);
    f.kind = kind;
    f.clause = clause;
    f.unit_id = unit.id;
    f.sql_text = std::move(sql);
    f.span = span;
    f.core = core;
    f.ordinal = ordinal;
    out.push_back(std::move(f));
  };
  for (std::size_t ci = 0; ci < stmt.cores.size(); ++ci) {
    const auto& core = stmt.cores[ci];
    if (!core.values.empty()) continue;
    const std::string prefix = ci ? "c" + std::to_string(ci) + "." : "";
    if (core.from) {
      add(prefix + "relation", KnowledgeKind::Relation, Clause::FromJoin, "FROM " + render_from(*core.from),
          core.from_span, ci, 0);
    }
    if (core.where) {
      std::size_t i = 0;
      for (const auto* c : conjuncts(*core.where)) {
        ++i;
        add(prefix + "where." + std::to_string(i), KnowledgeKind::Condition, Clause::Where, render_expr(*c), c->span,
            ci, i);
      }
    }
    if (!core.group_by.empty()) {
      add(prefix + "group", KnowledgeKind::Dimension, Clause::GroupBy, "GROUP BY " + render_exprs(core.group_by),
          core.group_span, ci, 0);
    }
    if (core.having) {
      std::size_t i = 0;
      for (const auto* c : conjuncts(*core.having)) {
        ++i;
        add(prefix + "having." + std::to_string(i), KnowledgeKind::Condition, Clause::Having, render_expr(*c),
            c->span, ci, i);
      }
    }
    for (std::size_t i = 0; i < core.columns.size(); ++i) {
      const auto& rc = core.columns[i];
      add(prefix + "select." + std::to_string(i + 1), KnowledgeKind::Calculation, Clause::Select,
          render_result_column(rc), rc.span, ci, i + 1);
    }
  }
  for (std::size_t j = 0; j < stmt.order_by.size(); ++j) {
    const auto& term = stmt.order_by[j];
    if (is_simple_order_expr(term.expr)) continue;
    add("order." + std::to_string(j + 1), KnowledgeKind::Calculation, Clause::OrderByLimitDistinct,
        render_expr(term.expr), term.expr.span, 0, j + 1);
    out.back().from_order_by = true;
  }
  const bool distinct = stmt.cores.size() == 1 && stmt.cores[0].distinct;
  if (distinct || !stmt.order_by.empty() || stmt.limit) {
    Span span;
    if (!stmt.order_by.empty() || stmt.limit) {
      span.begin = !stmt.order_by.empty() ? stmt.order_span.begin : stmt.limit_span.begin;
      span.end = stmt.limit ? stmt.limit_span.end : stmt.order_span.end;
    } else {
      span = stmt.cores[0].distinct_span;
    }
    add("output", KnowledgeKind::Output, Clause::OrderByLimitDistinct, render_output_clause(distinct, stmt), span, 0,
        0);
  }
  return out;
}

const Fragment* find_fragment(const std::vector<Fragment>& fragments, std::string_view id) {
  for (const auto& f : fragments) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

Residual residual_of(const SelectStmt& body) {
  Residual r;
  r.with = body.with;
  r.compound_ops = body.compound_ops;
  for (const auto& core : body.cores) {
    r.core_distinct.push_back(body.cores.size() > 1 && core.distinct);
    r.core_values.push_back(core.values);
  }
  return r;
}

SelectStmt assemble_unit(const std::vector<Fragment>& fragments, const Residual& residual) {
  std::size_t ncores = residual.core_values.size();
  for (const auto& f : fragments) ncores = std::max(ncores, f.core + 1);
  if (ncores == 0) throw ValidationError("no fragments to assemble");

  SelectStmt out;
  out.with = residual.with;
  out.cores.resize(ncores);
  for (std::size_t ci = 0; ci < ncores; ++ci) {
    auto& core = out.cores[ci];
    if (ci < residual.core_values.size() && !residual.core_values[ci].empty()) {
      core.values = residual.core_values[ci];
      continue;
    }
    if (ci < residual.core_distinct.size()) core.distinct = residual.core_distinct[ci];
    std::vector<const Fragment*> selects, wheres, havings;
    for (const auto& f : fragments) {
      if (f.core != ci || f.from_order_by) continue;
      switch (f.kind) {
        case KnowledgeKind::Calculation:
          selects.push_back(&f);
          break;
        case KnowledgeKind::Condition:
          (f.clause == Clause::Having ? havings : wheres).push_back(&f);
          break;
        case KnowledgeKind::Relation:
          core.from = parse_clauses(f.sql_text).from;
          break;
        case KnowledgeKind::Dimension:
          core.group_by = *parse_clauses(f.sql_text).group_by;
          break;
        case KnowledgeKind::Output:
          break;
      }
    }
    auto by_ordinal = [](const Fragment* a, const Fragment* b) { return a->ordinal < b->ordinal; };
    std::stable_sort(selects.begin(), selects.end(), by_ordinal);
    std::stable_sort(wheres.begin(), wheres.end(), by_ordinal);
    std::stable_sort(havings.begin(), havings.end(), by_ordinal);
    for (const auto* f : selects) {
      for (auto& rc : parse_result_columns(f->sql_text)) core.columns.push_back(std::move(rc));
    }
    if (core.columns.empty()) throw ValidationError("member " + std::to_string(ci) + " has no result columns");
    auto conj = [](const std::vector<const Fragment*>& fs) {
      std::vector<Expr> parts;
      for (const auto* f : fs) parts.push_back(parse_expression(f->sql_text));
      return make_conjunction(std::move(parts));
    };
    core.where = conj(wheres);
    core.having = conj(havings);
  }
  for (std::size_t i = 0; i + 1 < ncores; ++i) {
    out.compound_ops.push_back(i < residual.compound_ops.size() ? residual.compound_ops[i] : "UNION");
  }
  for (const auto& f : fragments) {
    if (f.kind != KnowledgeKind::Output) continue;
    auto cs = parse_clauses(f.sql_text);
    if (cs.distinct) out.cores[0].distinct = true;
    if (cs.order_by) out.order_by = std::move(*cs.order_by);
    out.limit = std::move(cs.limit);
    out.offset = std::move(cs.offset);
  }
  return out;
}

}  // namespace sqlknow::sql
