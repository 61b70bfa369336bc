#include "sqlknow/sql/ast.hpp"

#include <cctype>

#include "sqlknow/errors.hpp"
#include "sqlknow/sql/lexer.hpp"

namespace sqlknow {

CycleError::CycleError(std::vector<std::string> cycle)
    : Error([&] {
        std::string msg = "dependency cycle:";
        for (const auto& n : cycle) msg += " " + n + " ->";
        if (!cycle.empty()) msg += " " + cycle.front();
        return msg;
      }()),
      cycle_(std::move(cycle)) {}

}  // namespace sqlknow

namespace sqlknow::sql {

std::string Ident::name() const {
  if (text.size() >= 2) {
    const char open = text.front();
    const char close = text.back();
    if ((open == '"' && close == '"') || (open == '`' && close == '`') || (open == '[' && close == ']') ||
        (open == '\'' && close == '\'')) {
      std::string out;
      for (std::size_t i = 1; i + 1 < text.size(); ++i) {
        out += text[i];
        if (open != '[' && text[i] == open && i + 2 < text.size() && text[i + 1] == open) ++i;
      }
      return out;
    }
  }
  return text;
}

std::string Ident::key() const { return ident_key(name()); }

bool Ident::quoted() const noexcept {
  return !text.empty() && (text.front() == '"' || text.front() == '`' || text.front() == '[' ||
                           text.front() == '\'');
}

std::string ident_key(std::string_view unquoted) {
  std::string out(unquoted);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string quote_ident_if_needed(std::string_view name) {
  bool plain = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) plain = false;
  }
  if (plain) {
    std::string upper(name);
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (is_reserved_word(upper)) plain = false;
  }
  if (plain) return std::string(name);
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

bool same_ident(const Ident& a, const Ident& b) { return a.text == b.text; }

bool same_idents(const std::vector<Ident>& a, const std::vector<Ident>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_ident(a[i], b[i])) return false;
  }
  return true;
}

bool same_opt_ident(const std::optional<Ident>& a, const std::optional<Ident>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_ident(*a, *b);
}

bool same_exprs(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_structure(a[i], b[i])) return false;
  }
  return true;
}

bool same_opt_expr(const std::optional<Expr>& a, const std::optional<Expr>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_structure(*a, *b);
}

bool same_order(const std::vector<OrderTerm>& a, const std::vector<OrderTerm>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].collate != b[i].collate || a[i].direction != b[i].direction || a[i].nulls != b[i].nulls) {
      return false;
    }
    if (!same_structure(a[i].expr, b[i].expr)) return false;
  }
  return true;
}

bool same_from(const FromClause& a, const FromClause& b);

bool same_source(const FromSource& a, const FromSource& b) {
  if (a.kind != b.kind || !same_idents(a.name, b.name) || !same_opt_ident(a.alias, b.alias) ||
      a.as_keyword != b.as_keyword || a.indexed != b.indexed || !same_exprs(a.fn_args, b.fn_args)) {
    return false;
  }
  if (static_cast<bool>(a.subquery) != static_cast<bool>(b.subquery)) return false;
  if (a.subquery && !same_structure(*a.subquery, *b.subquery)) return false;
  if (static_cast<bool>(a.group) != static_cast<bool>(b.group)) return false;
  return !a.group || same_from(*a.group, *b.group);
}

bool same_from(const FromClause& a, const FromClause& b) {
  if (!same_source(a.first, b.first) || a.joins.size() != b.joins.size()) return false;
  for (std::size_t i = 0; i < a.joins.size(); ++i) {
    const auto& x = a.joins[i];
    const auto& y = b.joins[i];
    if (x.op != y.op || !same_source(x.source, y.source) || !same_opt_expr(x.on, y.on) ||
        !same_idents(x.using_columns, y.using_columns)) {
      return false;
    }
  }
  return true;
}

bool same_core(const SelectCore& a, const SelectCore& b) {
  if (a.distinct != b.distinct || a.all != b.all || a.columns.size() != b.columns.size()) return false;
  for (std::size_t i = 0; i < a.columns.size(); ++i) {
    const auto& x = a.columns[i];
    const auto& y = b.columns[i];
    if (!same_structure(x.expr, y.expr) || !same_opt_ident(x.alias, y.alias) || x.as_keyword != y.as_keyword) {
      return false;
    }
  }
  if (a.from.has_value() != b.from.has_value()) return false;
  if (a.from && !same_from(*a.from, *b.from)) return false;
  if (!same_opt_expr(a.where, b.where) || !same_exprs(a.group_by, b.group_by) ||
      !same_opt_expr(a.having, b.having) || a.values.size() != b.values.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (!same_exprs(a.values[i], b.values[i])) return false;
  }
  return true;
}

void clear_from(FromClause& f);

void clear_source(FromSource& s) {
  s.span = {};
  for (auto& n : s.name) n.span = {};
  if (s.alias) s.alias->span = {};
  for (auto& e : s.fn_args) clear_spans(e);
  if (s.subquery) clear_spans(*s.subquery);
  if (s.group) clear_from(*s.group);
}

void clear_from(FromClause& f) {
  f.span = {};
  clear_source(f.first);
  for (auto& j : f.joins) {
    j.span = {};
    clear_source(j.source);
    if (j.on) clear_spans(*j.on);
    for (auto& u : j.using_columns) u.span = {};
  }
}

int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Binary:
      if (e.op == "OR") return 1;
      if (e.op == "AND") return 2;
      return 4;
    case ExprKind::Unary:
      return e.op == "NOT" ? 3 : 10;
    case ExprKind::Between:
    case ExprKind::In:
    case ExprKind::Like:
    case ExprKind::Postfix:
      return 4;
    default:
      return 10;
  }
}

}  // namespace

bool same_structure(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.text != b.text || a.op != b.op || a.negated != b.negated ||
      a.distinct != b.distinct || a.has_operand != b.has_operand || a.has_else != b.has_else ||
      a.window_name != b.window_name || !same_idents(a.path, b.path) || !same_exprs(a.args, b.args)) {
    return false;
  }
  if (static_cast<bool>(a.subquery) != static_cast<bool>(b.subquery)) return false;
  if (a.subquery && !same_structure(*a.subquery, *b.subquery)) return false;
  if (static_cast<bool>(a.filter) != static_cast<bool>(b.filter)) return false;
  if (a.filter && !same_structure(*a.filter, *b.filter)) return false;
  if (static_cast<bool>(a.window) != static_cast<bool>(b.window)) return false;
  if (a.window) {
    const auto& x = *a.window;
    const auto& y = *b.window;
    if (x.base != y.base || x.frame != y.frame || !same_exprs(x.partition_by, y.partition_by) ||
        !same_order(x.order_by, y.order_by)) {
      return false;
    }
  }
  return true;
}

bool same_structure(const SelectStmt& a, const SelectStmt& b) {
  if (a.with.has_value() != b.with.has_value()) return false;
  if (a.with) {
    if (a.with->recursive != b.with->recursive || a.with->ctes.size() != b.with->ctes.size()) return false;
    for (std::size_t i = 0; i < a.with->ctes.size(); ++i) {
      const auto& x = a.with->ctes[i];
      const auto& y = b.with->ctes[i];
      if (!same_ident(x.name, y.name) || !same_idents(x.columns, y.columns) ||
          x.materialized != y.materialized || !same_structure(*x.body, *y.body)) {
        return false;
      }
    }
  }
  if (a.cores.size() != b.cores.size() || a.compound_ops != b.compound_ops) return false;
  for (std::size_t i = 0; i < a.cores.size(); ++i) {
    if (!same_core(a.cores[i], b.cores[i])) return false;
  }
  return same_order(a.order_by, b.order_by) && same_opt_expr(a.limit, b.limit) &&
         same_opt_expr(a.offset, b.offset);
}

void clear_spans(Expr& e) {
  e.span = {};
  for (auto& p : e.path) p.span = {};
  for (auto& a : e.args) clear_spans(a);
  if (e.subquery) clear_spans(*e.subquery);
  if (e.filter) clear_spans(*e.filter);
  if (e.window) {
    for (auto& p : e.window->partition_by) clear_spans(p);
    for (auto& o : e.window->order_by) {
      o.span = {};
      clear_spans(o.expr);
    }
  }
}

void clear_spans(SelectStmt& s) {
  s.span = s.body_span = s.order_span = s.limit_span = {};
  if (s.with) {
    s.with->span = {};
    for (auto& c : s.with->ctes) {
      c.span = c.body_span = c.name.span = {};
      for (auto& col : c.columns) col.span = {};
      clear_spans(*c.body);
    }
  }
  for (auto& core : s.cores) {
    core.span = core.select_span = core.from_span = core.where_span = core.group_span = core.having_span =
        core.distinct_span = {};
    for (auto& rc : core.columns) {
      rc.span = {};
      if (rc.alias) rc.alias->span = {};
      clear_spans(rc.expr);
    }
    if (core.from) clear_from(*core.from);
    if (core.where) clear_spans(*core.where);
    for (auto& g : core.group_by) clear_spans(g);
    if (core.having) clear_spans(*core.having);
    for (auto& row : core.values) {
      for (auto& v : row) clear_spans(v);
    }
  }
  for (auto& o : s.order_by) {
    o.span = {};
    clear_spans(o.expr);
  }
  if (s.limit) clear_spans(*s.limit);
  if (s.offset) clear_spans(*s.offset);
}

Expr make_column(std::string_view qualifier, std::string_view column) {
  Expr e;
  e.kind = ExprKind::Column;
  if (!qualifier.empty()) e.path.push_back(Ident{quote_ident_if_needed(qualifier), {}});
  e.path.push_back(Ident{quote_ident_if_needed(column), {}});
  return e;
}

Expr make_literal(std::string text) {
  Expr e;
  e.kind = ExprKind::Literal;
  e.text = std::move(text);
  return e;
}

Expr make_binary(std::string op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = ExprKind::Binary;
  e.op = std::move(op);
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

Expr make_paren(Expr inner) {
  Expr e;
  e.kind = ExprKind::Paren;
  e.args.push_back(std::move(inner));
  return e;
}

std::optional<Expr> make_conjunction(std::vector<Expr> parts) {
  std::optional<Expr> out;
  const bool wrap = parts.size() > 1;
  for (auto& p : parts) {
    Expr term = wrap && precedence(p) < 2 ? make_paren(std::move(p)) : std::move(p);
    if (!out) {
      out = std::move(term);
    } else {
      out = make_binary("AND", std::move(*out), std::move(term));
    }
  }
  return out;
}

std::vector<const Expr*> conjuncts(const Expr& e) {
  std::vector<const Expr*> out;
  if (e.kind == ExprKind::Binary && e.op == "AND") {
    for (const auto& a : e.args) {
      auto sub = conjuncts(a);
      out.insert(out.end(), sub.begin(), sub.end());
    }
  } else {
    out.push_back(&e);
  }
  return out;
}

}  // namespace sqlknow::sql
