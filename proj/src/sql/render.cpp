#include "sqlknow/sql/render.hpp"

namespace sqlknow::sql {
namespace {

std::string indent_lines(const std::string& text, const std::string& pad) {
  std::string out = pad;
  for (char c : text) {
    out += c;
    if (c == '\n') out += pad;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string render_path(const std::vector<Ident>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += '.';
    out += path[i].text;
  }
  return out;
}

std::string render_window(const WindowSpec& w) {
  std::vector<std::string> parts;
  if (!w.base.empty()) parts.push_back(w.base);
  if (!w.partition_by.empty()) parts.push_back("PARTITION BY " + render_exprs(w.partition_by));
  if (!w.order_by.empty()) parts.push_back("ORDER BY " + render_order_terms(w.order_by));
  if (!w.frame.empty()) parts.push_back(w.frame);
  return "(" + join(parts, " ") + ")";
}

std::string render_source(const FromSource& s) {
  std::string out;
  switch (s.kind) {
    case FromSource::Kind::Table:
    case FromSource::Kind::TableFunction:
      out = render_path(s.name);
      if (s.kind == FromSource::Kind::TableFunction) out += "(" + render_exprs(s.fn_args) + ")";
      break;
    case FromSource::Kind::Subquery:
      out = "(" + render(*s.subquery, RenderStyle::Compact) + ")";
      break;
    case FromSource::Kind::Group:
      out = "(" + render_from(*s.group) + ")";
      break;
  }
  if (s.alias) out += (s.as_keyword ? " AS " : " ") + s.alias->text;
  if (!s.indexed.empty()) out += " " + s.indexed;
  return out;
}

std::string render_core(const SelectCore& core, bool pretty) {
  const char* nl = pretty ? "\n" : " ";
  if (!core.values.empty()) {
    std::vector<std::string> rows;
    for (const auto& r : core.values) rows.push_back("(" + render_exprs(r) + ")");
    return "VALUES " + join(rows, ", ");
  }
  std::string out = "SELECT ";
  if (core.distinct) out += "DISTINCT ";
  if (core.all) out += "ALL ";
  std::vector<std::string> cols;
  for (const auto& c : core.columns) cols.push_back(render_result_column(c));
  out += join(cols, ", ");
  if (core.from) out += std::string(nl) + "FROM " + render_from(*core.from);
  if (core.where) out += std::string(nl) + "WHERE " + render_expr(*core.where);
  if (!core.group_by.empty()) out += std::string(nl) + "GROUP BY " + render_exprs(core.group_by);
  if (core.having) out += std::string(nl) + "HAVING " + render_expr(*core.having);
  return out;
}

std::string render_limit(const SelectStmt& s) {
  std::string out = "LIMIT " + render_expr(*s.limit);
  if (s.offset) out += " OFFSET " + render_expr(*s.offset);
  return out;
}

}  // namespace

std::string render_exprs(const std::vector<Expr>& es) {
  std::vector<std::string> parts;
  parts.reserve(es.size());
  for (const auto& e : es) parts.push_back(render_expr(e));
  return join(parts, ", ");
}

std::string render_expr(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Literal:
    case ExprKind::Param:
      return e.text;
    case ExprKind::Column:
      return render_path(e.path);
    case ExprKind::Star:
      return e.path.empty() ? "*" : render_path(e.path) + ".*";
    case ExprKind::Unary: {
      auto inner = render_expr(e.args[0]);
      if (e.op == "NOT") return "NOT " + inner;
      if (!inner.empty() && (inner[0] == '-' || inner[0] == '+')) return e.op + " " + inner;
      return e.op + inner;
    }
    case ExprKind::Binary:
      return render_expr(e.args[0]) + " " + e.op + " " + render_expr(e.args[1]);
    case ExprKind::Paren:
      return "(" + render_exprs(e.args) + ")";
    case ExprKind::Function: {
      std::string out = e.text + "(";
      if (e.distinct) out += "DISTINCT ";
      out += render_exprs(e.args) + ")";
      if (e.filter) out += " FILTER (WHERE " + render_expr(*e.filter) + ")";
      if (e.window) out += " OVER " + render_window(*e.window);
      if (!e.window_name.empty()) out += " OVER " + e.window_name;
      return out;
    }
    case ExprKind::Case: {
      std::string out = "CASE";
      std::size_t i = 0;
      if (e.has_operand) out += " " + render_expr(e.args[i++]);
      const std::size_t pairs_end = e.has_else ? e.args.size() - 1 : e.args.size();
      for (; i + 1 < pairs_end; i += 2) {
        out += " WHEN " + render_expr(e.args[i]) + " THEN " + render_expr(e.args[i + 1]);
      }
      if (e.has_else) out += " ELSE " + render_expr(e.args.back());
      return out + " END";
    }
    case ExprKind::Cast:
      return "CAST(" + render_expr(e.args[0]) + " AS " + e.text + ")";
    case ExprKind::Collate:
      return render_expr(e.args[0]) + " COLLATE " + e.op;
    case ExprKind::Between:
      return render_expr(e.args[0]) + (e.negated ? " NOT BETWEEN " : " BETWEEN ") + render_expr(e.args[1]) +
             " AND " + render_expr(e.args[2]);
    case ExprKind::In: {
      std::string out = render_expr(e.args[0]) + (e.negated ? " NOT IN (" : " IN (");
      if (e.subquery) {
        out += render(*e.subquery, RenderStyle::Compact);
      } else {
        std::vector<std::string> items;
        for (std::size_t i = 1; i < e.args.size(); ++i) items.push_back(render_expr(e.args[i]));
        out += join(items, ", ");
      }
      return out + ")";
    }
    case ExprKind::Like: {
      std::string out = render_expr(e.args[0]) + (e.negated ? " NOT " : " ") + e.op + " " + render_expr(e.args[1]);
      if (e.args.size() > 2) out += " ESCAPE " + render_expr(e.args[2]);
      return out;
    }
    case ExprKind::Postfix:
      return render_expr(e.args[0]) + " " + e.op;
    case ExprKind::Exists:
      return "EXISTS (" + render(*e.subquery, RenderStyle::Compact) + ")";
    case ExprKind::Subquery:
      return "(" + render(*e.subquery, RenderStyle::Compact) + ")";
  }
  return {};
}

std::string render_result_column(const ResultColumn& rc) {
  auto out = render_expr(rc.expr);
  if (rc.alias) out += (rc.as_keyword ? " AS " : " ") + rc.alias->text;
  return out;
}

std::string render_from(const FromClause& from) {
  std::string out = render_source(from.first);
  for (const auto& j : from.joins) {
    out += j.op == "," ? ", " : " " + j.op + " ";
    out += render_source(j.source);
    if (j.on) out += " ON " + render_expr(*j.on);
    if (!j.using_columns.empty()) {
      std::vector<std::string> cols;
      for (const auto& c : j.using_columns) cols.push_back(c.text);
      out += " USING (" + join(cols, ", ") + ")";
    }
  }
  return out;
}

std::string render_order_term(const OrderTerm& t) {
  auto out = render_expr(t.expr);
  if (!t.collate.empty()) out += " COLLATE " + t.collate;
  if (!t.direction.empty()) out += " " + t.direction;
  if (!t.nulls.empty()) out += " " + t.nulls;
  return out;
}

std::string render_order_terms(const std::vector<OrderTerm>& terms) {
  std::vector<std::string> parts;
  for (const auto& t : terms) parts.push_back(render_order_term(t));
  return join(parts, ", ");
}

std::string render_output_clause(bool distinct, const SelectStmt& stmt) {
  std::vector<std::string> parts;
  if (distinct) parts.emplace_back("DISTINCT");
  if (!stmt.order_by.empty()) parts.push_back("ORDER BY " + render_order_terms(stmt.order_by));
  if (stmt.limit) parts.push_back(render_limit(stmt));
  return join(parts, " ");
}

std::string render(const SelectStmt& stmt, RenderStyle style) {
  const bool pretty = style == RenderStyle::Pretty;
  const char* nl = pretty ? "\n" : " ";
  std::string out;
  if (stmt.with) {
    out += stmt.with->recursive ? "WITH RECURSIVE " : "WITH ";
    for (std::size_t i = 0; i < stmt.with->ctes.size(); ++i) {
      const auto& c = stmt.with->ctes[i];
      if (i) out += ", ";
      out += c.name.text;
      if (!c.columns.empty()) {
        std::vector<std::string> cols;
        for (const auto& col : c.columns) cols.push_back(col.text);
        out += "(" + join(cols, ", ") + ")";
      }
      out += " AS ";
      if (!c.materialized.empty()) out += c.materialized + " ";
      if (pretty) {
        out += "(\n" + indent_lines(render(*c.body, style), "  ") + "\n)";
      } else {
        out += "(" + render(*c.body, style) + ")";
      }
    }
    out += nl;
  }
  for (std::size_t i = 0; i < stmt.cores.size(); ++i) {
    if (i) out += std::string(nl) + stmt.compound_ops[i - 1] + nl;
    out += render_core(stmt.cores[i], pretty);
  }
  if (!stmt.order_by.empty()) out += std::string(nl) + "ORDER BY " + render_order_terms(stmt.order_by);
  if (stmt.limit) out += std::string(nl) + render_limit(stmt);
  return out;
}

}  // namespace sqlknow::sql
