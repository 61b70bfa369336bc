#include "sqlknow/sql/probe.hpp"

#include "sqlknow/errors.hpp"
#include "sqlknow/sql/binder.hpp"
#include "sqlknow/sql/render.hpp"

namespace sqlknow::sql {

const char* to_string(Expectation e) {
  switch (e) {
    case Expectation::SampleValues: return "SampleValues";
    case Expectation::AtomicAndCompositeCounts: return "AtomicAndCompositeCounts";
    case Expectation::RowColCounts: return "RowColCounts";
    case Expectation::DistinctValues: return "DistinctValues";
    case Expectation::SampleRecords: return "SampleRecords";
  }
  return "";
}

Expectation expectation_for(KnowledgeKind k) {
  switch (k) {
    case KnowledgeKind::Calculation: return Expectation::SampleValues;
    case KnowledgeKind::Condition: return Expectation::AtomicAndCompositeCounts;
    case KnowledgeKind::Relation: return Expectation::RowColCounts;
    case KnowledgeKind::Dimension: return Expectation::DistinctValues;
    case KnowledgeKind::Output: return Expectation::SampleRecords;
  }
  return Expectation::SampleValues;
}

namespace {

ResultColumn column_of(Expr e, std::string alias = {}) {
  ResultColumn rc;
  rc.expr = std::move(e);
  if (!alias.empty()) {
    rc.alias = Ident{alias, {}};
    rc.as_keyword = true;
  }
  return rc;
}

Expr count_star() {
  Expr e;
  e.kind = ExprKind::Function;
  e.text = "COUNT";
  Expr star;
  star.kind = ExprKind::Star;
  e.args.push_back(std::move(star));
  return e;
}

SelectStmt single(SelectCore core) {
  SelectStmt s;
  s.cores.push_back(std::move(core));
  return s;
}

Expr scalar(SelectStmt s) {
  Expr e;
  e.kind = ExprKind::Subquery;
  e.subquery = Box<SelectStmt>(std::move(s));
  return e;
}

FromSource derived(SelectStmt s) {
  FromSource src;
  src.kind = FromSource::Kind::Subquery;
  src.subquery = Box<SelectStmt>(std::move(s));
  return src;
}

SelectCore count_core(std::optional<FromClause> from, std::optional<Expr> where) {
  SelectCore c;
  c.columns.push_back(column_of(count_star()));
  c.from = std::move(from);
  c.where = std::move(where);
  return c;
}

SelectStmt counts_pair(SelectStmt atomic, SelectStmt composite) {
  SelectCore outer;
  outer.columns.push_back(column_of(scalar(std::move(atomic)), "atomic_count"));
  outer.columns.push_back(column_of(scalar(std::move(composite)), "composite_count"));
  return single(std::move(outer));
}

std::optional<Expr> substituted(const std::optional<Expr>& e, const SelectCore& core) {
  if (!e) return std::nullopt;
  return substitute_aliases(*e, core);
}

SelectStmt grouped_count(const SelectCore& core, const Expr& having) {
  SelectCore inner;
  inner.columns = core.columns;
  inner.from = core.from;
  inner.where = core.where;
  inner.group_by = core.group_by;
  inner.having = having;
  SelectCore outer;
  outer.columns.push_back(column_of(count_star()));
  outer.from = FromClause{};
  outer.from->first = derived(single(std::move(inner)));
  return single(std::move(outer));
}

}  // namespace

ProbeQuery build_probe(const SubqueryUnit& unit, const Fragment& fragment,
                       const std::vector<const SubqueryUnit*>& deps) {
  if (fragment.unit_id != unit.id) {
    throw ValidationError("fragment " + fragment.id + " does not belong to unit " + unit.id);
  }
  const auto& stmt = unit.ast;
  if (fragment.core >= stmt.cores.size()) throw NotFoundError("unknown fragment: " + fragment.id);
  const auto& core = stmt.cores[fragment.core];

  ProbeQuery probe;
  probe.fragment_id = fragment.id;
  probe.unit_id = unit.id;
  probe.kind = fragment.kind;
  probe.expects = expectation_for(fragment.kind);

  SelectStmt body;
  switch (fragment.kind) {
    case KnowledgeKind::Calculation: {
      SelectCore c;
      if (fragment.from_order_by) {
        const auto& term = stmt.order_by.at(fragment.ordinal - 1);
        if (stmt.cores.size() == 1) {
          c.columns.push_back(column_of(substitute_aliases(term.expr, core)));
          c.from = core.from;
          c.where = core.where;
          c.group_by = core.group_by;
          c.having = core.having;
        } else {
          SelectStmt compound = stmt;
          compound.with.reset();
          compound.order_by.clear();
          compound.limit.reset();
          compound.offset.reset();
          c.columns.push_back(column_of(term.expr));
          c.from = FromClause{};
          c.from->first = derived(std::move(compound));
        }
      } else {
        c.columns.push_back(core.columns.at(fragment.ordinal - 1));
        c.from = core.from;
        c.where = core.where;
        c.group_by = core.group_by;
        c.having = core.having;
      }
      body = single(std::move(c));
      body.limit = make_literal(std::to_string(kSampleRows));
      break;
    }
    case KnowledgeKind::Condition: {
      const auto& clause_expr = fragment.clause == Clause::Having ? core.having : core.where;
      if (!clause_expr) throw NotFoundError("unknown fragment: " + fragment.id);
      const auto parts = conjuncts(*clause_expr);
      const Expr& atom = *parts.at(fragment.ordinal - 1);
      if (fragment.clause == Clause::Where) {
        body = counts_pair(single(count_core(core.from, substitute_aliases(atom, core))),
                           single(count_core(core.from, substituted(core.where, core))));
      } else {
        body = counts_pair(grouped_count(core, atom), grouped_count(core, *core.having));
      }
      break;
    }
    case KnowledgeKind::Relation: {
      body = single(count_core(core.from, std::nullopt));
      SelectCore cols;
      Expr star;
      star.kind = ExprKind::Star;
      cols.columns.push_back(column_of(std::move(star)));
      cols.from = core.from;
      SelectStmt columns_stmt = single(std::move(cols));
      columns_stmt.with = stmt.with;
      probe.columns_sql = render(with_dependencies(columns_stmt, deps));
      break;
    }
    case KnowledgeKind::Dimension: {
      SelectCore c;
      c.distinct = true;
      for (const auto& g : core.group_by) c.columns.push_back(column_of(substitute_aliases(g, core)));
      c.from = core.from;
      c.where = substituted(core.where, core);
      body = single(std::move(c));
      for (std::size_t i = 0; i < core.group_by.size(); ++i) {
        OrderTerm t;
        t.expr = make_literal(std::to_string(i + 1));
        body.order_by.push_back(std::move(t));
      }
      body.limit = make_literal(std::to_string(kDistinctValues));
      break;
    }
    case KnowledgeKind::Output:
      body = stmt;
      body.with.reset();
      break;
  }
  body.with = stmt.with;
  probe.sql_text = render(with_dependencies(body, deps));
  return probe;
}

}  // namespace sqlknow::sql
