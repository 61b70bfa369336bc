#include "sqlknow/sql/splice.hpp"

#include <algorithm>

#include "sqlknow/errors.hpp"
#include "sqlknow/sql/parser.hpp"
#include "sqlknow/sql/render.hpp"

namespace sqlknow::sql {
namespace {

std::vector<Expr> conjunct_copies(const std::optional<Expr>& e) {
  std::vector<Expr> out;
  if (!e) return out;
  for (const auto* c : conjuncts(*e)) out.push_back(*c);
  return out;
}

std::optional<Expr> append_conjunct(const std::optional<Expr>& existing, Expr extra) {
  std::vector<Expr> parts;
  if (existing) parts.push_back(*existing);
  parts.push_back(std::move(extra));
  return make_conjunction(std::move(parts));
}

void apply_clauses(ClauseSet cs, SelectStmt& s, SelectCore& core) {
  if (cs.distinct) core.distinct = true;
  if (cs.from) core.from = std::move(cs.from);
  if (cs.where) core.where = append_conjunct(core.where, std::move(*cs.where));
  if (cs.group_by) core.group_by = std::move(*cs.group_by);
  if (cs.having) core.having = append_conjunct(core.having, std::move(*cs.having));
  if (cs.order_by) s.order_by = std::move(*cs.order_by);
  if (cs.limit) {
    s.limit = std::move(cs.limit);
    s.offset = std::move(cs.offset);
  }
}

template <class F>
auto parsing(const std::string& what, F&& fn) {
  try {
    return fn();
  } catch (const SyntaxError& e) {
    throw SpliceError("replacement is not a valid " + what + ": " + e.what());
  }
}

}  // namespace

SpliceResult splice_fragment(const SubqueryUnit& unit, const std::string& fragment_id,
                             const std::optional<std::string>& replacement, const SpliceContext& ctx) {
  const auto fragments = extract_fragments(unit);
  const auto* f = find_fragment(fragments, fragment_id);
  if (!f) throw NotFoundError("unknown fragment: " + fragment_id);

  SelectStmt s = unit.ast;
  auto& core = s.cores.at(f->core);
  const bool clause_form = replacement && starts_with_clause_keyword(*replacement);

  switch (f->kind) {
    case KnowledgeKind::Calculation: {
      if (f->from_order_by) {
        auto& terms = s.order_by;
        const auto at = terms.begin() + static_cast<std::ptrdiff_t>(f->ordinal - 1);
        if (!replacement) {
          terms.erase(at);
        } else if (clause_form) {
          terms.erase(at);
          apply_clauses(parsing("clause", [&] { return parse_clauses(*replacement); }), s, core);
        } else {
          at->expr = parsing("expression", [&] { return parse_expression(*replacement); });
        }
        break;
      }
      auto& cols = core.columns;
      const auto at = cols.begin() + static_cast<std::ptrdiff_t>(f->ordinal - 1);
      if (!replacement) {
        if (cols.size() == 1) throw SpliceError("cannot delete the only result column of " + unit.name);
        cols.erase(at);
      } else if (clause_form) {
        throw SpliceError("a result column cannot be replaced by a clause");
      } else {
        auto fresh = parsing("result column", [&] { return parse_result_columns(*replacement); });
        const auto pos = cols.erase(at);
        cols.insert(pos, fresh.begin(), fresh.end());
      }
      break;
    }
    case KnowledgeKind::Condition: {
      auto& slot = f->clause == Clause::Having ? core.having : core.where;
      auto parts = conjunct_copies(slot);
      const auto at = parts.begin() + static_cast<std::ptrdiff_t>(f->ordinal - 1);
      std::optional<ClauseSet> extra;
      if (!replacement) {
        parts.erase(at);
      } else if (clause_form) {
        parts.erase(at);
        extra = parsing("clause", [&] { return parse_clauses(*replacement); });
      } else {
        *at = parsing("predicate", [&] { return parse_expression(*replacement); });
      }
      slot = make_conjunction(std::move(parts));
      if (extra) apply_clauses(std::move(*extra), s, core);
      break;
    }
    case KnowledgeKind::Relation: {
      if (!replacement) throw SpliceError("the relation of " + unit.name + " cannot be deleted");
      const auto text = clause_form ? *replacement : "FROM " + *replacement;
      auto cs = parsing("FROM clause", [&] { return parse_clauses(text); });
      if (!cs.from) throw SpliceError("replacement for a relation must contain a FROM clause");
      apply_clauses(std::move(cs), s, core);
      break;
    }
    case KnowledgeKind::Dimension: {
      if (!replacement) {
        if (core.having) throw SpliceError("GROUP BY cannot be removed while HAVING is present");
        core.group_by.clear();
        break;
      }
      const auto text = clause_form ? *replacement : "GROUP BY " + *replacement;
      apply_clauses(parsing("GROUP BY clause", [&] { return parse_clauses(text); }), s, core);
      break;
    }
    case KnowledgeKind::Output: {
      s.order_by.clear();
      s.limit.reset();
      s.offset.reset();
      if (s.cores.size() == 1) s.cores[0].distinct = false;
      if (replacement) apply_clauses(parsing("clause", [&] { return parse_clauses(*replacement); }), s, core);
      break;
    }
  }

  SpliceResult result;
  result.unit = unit;
  result.unit.ast = std::move(s);
  result.unit.script_span = {};
  auto names = ctx.cte_names;
  if (names.empty()) names = unit.referenced_ctes;
  try {
    refresh_unit(result.unit, names, ctx.lookup);
  } catch (const SyntaxError& e) {
    throw SpliceError(std::string("spliced unit does not parse: ") + e.what());
  }

  auto missing = unresolved_columns(result.unit.ast, ctx.lookup);
  if (!missing.empty()) throw SpliceError("undefined column: " + missing.front());

  const auto& before = unit.output_columns;
  const auto& after = result.unit.output_columns;
  if (!unit.cte_columns.empty() && !after.empty() &&
      after.size() != unit.cte_columns.size()) {
    throw SpliceError(unit.name + " declares " + std::to_string(unit.cte_columns.size()) + " columns but yields " +
                      std::to_string(after.size()));
  }
  if (before.size() == after.size()) {
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (ident_key(before[i].name) != ident_key(after[i].name)) {
        result.renames[ident_key(before[i].name)] = after[i].name;
      }
    }
  }
  for (const auto& key : ctx.downstream_columns) {
    const bool kept = std::any_of(after.begin(), after.end(), [&](const auto& c) { return ident_key(c.name) == key; });
    if (!kept && !result.renames.count(key)) {
      throw SpliceError("edit drops column '" + key + "' of " + unit.name + " that is read downstream");
    }
  }
  return result;
}

}  // namespace sqlknow::sql
