#include "sqlknow/sql/parser.hpp"

#include <string>

#include "sqlknow/errors.hpp"
#include "sqlknow/sql/lexer.hpp"

namespace sqlknow::sql {
namespace {

std::string describe(const Token& t) {
  if (t.kind == TokenKind::End) return "end of input";
  return "'" + std::string(t.text) + "'";
}

bool is_join_keyword(const Token& t) {
  return t.is_word("JOIN") || t.is_word("INNER") || t.is_word("LEFT") || t.is_word("RIGHT") ||
         t.is_word("FULL") || t.is_word("CROSS") || t.is_word("NATURAL") || t.is_word("OUTER");
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text), toks_(tokenize(text)) {}

  SelectStmt statement() {
    auto stmt = select_stmt();
    if (peek().is_op(";")) advance();
    expect_end();
    return stmt;
  }

  Expr expression_only() {
    auto e = expr();
    expect_end();
    return e;
  }

  std::vector<ResultColumn> result_columns_only() {
    std::vector<ResultColumn> cols;
    cols.push_back(result_column());
    while (peek().is_op(",")) {
      advance();
      cols.push_back(result_column());
    }
    expect_end();
    return cols;
  }

  ClauseSet clauses_only() {
    ClauseSet cs;
    if (peek().is_word("DISTINCT")) {
      advance();
      cs.distinct = true;
    }
    if (peek().is_word("FROM")) {
      advance();
      cs.from = from_clause();
    }
    if (peek().is_word("WHERE")) {
      advance();
      cs.where = expr();
    }
    if (peek().is_word("GROUP")) {
      advance();
      expect_word("BY");
      cs.group_by = expr_list();
    }
    if (peek().is_word("HAVING")) {
      advance();
      cs.having = expr();
    }
    if (peek().is_word("ORDER")) {
      advance();
      expect_word("BY");
      cs.order_by = order_terms();
    }
    if (peek().is_word("LIMIT")) {
      SelectStmt tmp;
      limit_clause(tmp);
      cs.limit = std::move(tmp.limit);
      cs.offset = std::move(tmp.offset);
    }
    if (cs.empty()) fail("clause");
    expect_end();
    return cs;
  }

 private:
  std::string_view text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::uint32_t prev_end_ = 0;

  const Token& peek(std::size_t ahead = 0) const {
    auto i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& advance() {
    const Token& t = toks_[pos_];
    if (t.kind != TokenKind::End) {
      prev_end_ = t.span.end;
      ++pos_;
    }
    return t;
  }
  [[noreturn]] void fail(const std::string& expected) const {
    const auto& t = peek();
    throw SyntaxError(t.span.begin, expected,
                      "syntax error at offset " + std::to_string(t.span.begin) + ": expected " +
                          expected + " near " + describe(t));
  }
  void expect_op(std::string_view op) {
    if (!peek().is_op(op)) fail("'" + std::string(op) + "'");
    advance();
  }
  void expect_word(std::string_view w) {
    if (!peek().is_word(w)) fail(std::string(w));
    advance();
  }
  void expect_end() {
    if (peek().kind != TokenKind::End) fail("end of input");
  }
  std::uint32_t begin() const { return peek().span.begin; }
  Span span_from(std::uint32_t b) const { return {b, prev_end_}; }

  bool at_identifier() const {
    const auto& t = peek();
    if (t.kind == TokenKind::QuotedIdent) return true;
    return t.kind == TokenKind::Word && !is_reserved_word(t.upper);
  }

  Ident identifier(const std::string& what = "identifier") {
    if (!at_identifier()) fail(what);
    const auto& t = advance();
    return Ident{std::string(t.text), t.span};
  }

  // ---- statements -------------------------------------------------------

  SelectStmt select_stmt() {
    SelectStmt stmt;
    const auto b = begin();
    if (peek().is_word("WITH")) stmt.with = with_clause();
    const auto body_begin = begin();
    stmt.cores.push_back(select_core());
    while (true) {
      const auto& t = peek();
      std::string op;
      if (t.is_word("UNION")) {
        advance();
        op = "UNION";
        if (peek().is_word("ALL")) {
          advance();
          op = "UNION ALL";
        }
      } else if (t.is_word("INTERSECT")) {
        advance();
        op = "INTERSECT";
      } else if (t.is_word("EXCEPT")) {
        advance();
        op = "EXCEPT";
      } else {
        break;
      }
      stmt.compound_ops.push_back(op);
      stmt.cores.push_back(select_core());
    }
    if (peek().is_word("ORDER")) {
      const auto ob = begin();
      advance();
      expect_word("BY");
      stmt.order_by = order_terms();
      stmt.order_span = span_from(ob);
    }
    if (peek().is_word("LIMIT")) limit_clause(stmt);
    stmt.body_span = span_from(body_begin);
    stmt.span = span_from(b);
    return stmt;
  }

  void limit_clause(SelectStmt& stmt) {
    const auto lb = begin();
    expect_word("LIMIT");
    auto first = expr();
    if (peek().is_word("OFFSET")) {
      advance();
      stmt.limit = std::move(first);
      stmt.offset = expr();
    } else if (peek().is_op(",")) {
      advance();
      stmt.offset = std::move(first);
      stmt.limit = expr();
    } else {
      stmt.limit = std::move(first);
    }
    stmt.limit_span = span_from(lb);
  }

  WithClause with_clause() {
    WithClause w;
    const auto b = begin();
    expect_word("WITH");
    if (peek().is_word("RECURSIVE")) {
      advance();
      w.recursive = true;
    }
    do {
      if (!w.ctes.empty()) advance();
      Cte cte;
      const auto cb = begin();
      cte.name = identifier("common table expression name");
      if (peek().is_op("(")) {
        advance();
        cte.columns.push_back(identifier("column name"));
        while (peek().is_op(",")) {
          advance();
          cte.columns.push_back(identifier("column name"));
        }
        expect_op(")");
      }
      expect_word("AS");
      if (peek().is_word("NOT") && peek(1).is_word("MATERIALIZED")) {
        advance();
        advance();
        cte.materialized = "NOT MATERIALIZED";
      } else if (peek().is_word("MATERIALIZED")) {
        advance();
        cte.materialized = "MATERIALIZED";
      }
      expect_op("(");
      const auto bb = begin();
      cte.body = Box<SelectStmt>(select_stmt());
      cte.body_span = span_from(bb);
      expect_op(")");
      cte.span = span_from(cb);
      w.ctes.push_back(std::move(cte));
    } while (peek().is_op(","));
    w.span = span_from(b);
    return w;
  }

  SelectCore select_core() {
    SelectCore core;
    const auto b = begin();
    if (peek().is_word("VALUES")) {
      advance();
      do {
        if (!core.values.empty()) advance();
        expect_op("(");
        core.values.push_back(expr_list());
        expect_op(")");
      } while (peek().is_op(","));
      core.select_span = span_from(b);
      core.span = span_from(b);
      return core;
    }
    expect_word("SELECT");
    if (peek().is_word("DISTINCT")) {
      core.distinct_span = peek().span;
      advance();
      core.distinct = true;
    } else if (peek().is_word("ALL")) {
      advance();
      core.all = true;
    }
    core.columns.push_back(result_column());
    while (peek().is_op(",")) {
      advance();
      core.columns.push_back(result_column());
    }
    core.select_span = span_from(b);
    if (peek().is_word("FROM")) {
      const auto fb = begin();
      advance();
      core.from = from_clause();
      core.from_span = span_from(fb);
    }
    if (peek().is_word("WHERE")) {
      const auto wb = begin();
      advance();
      core.where = expr();
      core.where_span = span_from(wb);
    }
    if (peek().is_word("GROUP")) {
      const auto gb = begin();
      advance();
      expect_word("BY");
      core.group_by = expr_list();
      core.group_span = span_from(gb);
    }
    if (peek().is_word("HAVING")) {
      const auto hb = begin();
      advance();
      core.having = expr();
      core.having_span = span_from(hb);
    }
    core.span = span_from(b);
    return core;
  }

  ResultColumn result_column() {
    ResultColumn rc;
    const auto b = begin();
    if (peek().is_op("*")) {
      advance();
      rc.expr.kind = ExprKind::Star;
      rc.expr.span = span_from(b);
    } else if ((peek().kind == TokenKind::Word || peek().kind == TokenKind::QuotedIdent) &&
               peek(1).is_op(".") && peek(2).is_op("*")) {
      rc.expr.kind = ExprKind::Star;
      rc.expr.path.push_back(Ident{std::string(peek().text), peek().span});
      advance();
      advance();
      advance();
      rc.expr.span = span_from(b);
    } else {
      rc.expr = expr();
      if (peek().is_word("AS")) {
        advance();
        rc.as_keyword = true;
        if (peek().kind == TokenKind::String) {
          const auto& t = advance();
          rc.alias = Ident{std::string(t.text), t.span};
        } else {
          rc.alias = identifier("alias");
        }
      } else if (at_identifier()) {
        rc.alias = identifier();
      }
    }
    rc.span = span_from(b);
    return rc;
  }

  // ---- FROM -------------------------------------------------------------

  FromClause from_clause() {
    FromClause fc;
    const auto b = begin();
    fc.first = from_source();
    while (true) {
      const auto& t = peek();
      if (!(t.is_op(",") || is_join_keyword(t))) break;
      JoinStep step;
      const auto jb = begin();
      step.op = join_operator();
      step.source = from_source();
      if (peek().is_word("ON")) {
        advance();
        step.on = expr();
      } else if (peek().is_word("USING")) {
        advance();
        expect_op("(");
        step.using_columns.push_back(identifier("column name"));
        while (peek().is_op(",")) {
          advance();
          step.using_columns.push_back(identifier("column name"));
        }
        expect_op(")");
      }
      step.span = span_from(jb);
      fc.joins.push_back(std::move(step));
    }
    fc.span = span_from(b);
    return fc;
  }

  std::string join_operator() {
    if (peek().is_op(",")) {
      advance();
      return ",";
    }
    std::string op;
    auto add = [&](const char* w) {
      if (!op.empty()) op += ' ';
      op += w;
    };
    if (peek().is_word("NATURAL")) {
      advance();
      add("NATURAL");
    }
    if (peek().is_word("LEFT") || peek().is_word("RIGHT") || peek().is_word("FULL")) {
      add(advance().upper.c_str());
      if (peek().is_word("OUTER")) {
        advance();
        add("OUTER");
      }
    } else if (peek().is_word("INNER")) {
      advance();
      add("INNER");
    } else if (peek().is_word("CROSS")) {
      advance();
      add("CROSS");
    }
    expect_word("JOIN");
    add("JOIN");
    return op;
  }

  void table_alias(FromSource& src) {
    if (peek().is_word("AS")) {
      advance();
      src.as_keyword = true;
      src.alias = identifier("alias");
    } else if (at_identifier()) {
      src.alias = identifier();
    }
  }

  FromSource from_source() {
    FromSource src;
    const auto b = begin();
    if (peek().is_op("(")) {
      advance();
      if (peek().is_word("SELECT") || peek().is_word("WITH") || peek().is_word("VALUES")) {
        src.kind = FromSource::Kind::Subquery;
        src.subquery = Box<SelectStmt>(select_stmt());
        expect_op(")");
      } else {
        src.kind = FromSource::Kind::Group;
        src.group = Box<FromClause>(from_clause());
        expect_op(")");
      }
      table_alias(src);
      src.span = span_from(b);
      return src;
    }
    src.name.push_back(identifier("table name"));
    if (peek().is_op(".")) {
      advance();
      src.name.push_back(identifier("table name"));
    }
    if (peek().is_op("(")) {
      advance();
      src.kind = FromSource::Kind::TableFunction;
      if (!peek().is_op(")")) src.fn_args = expr_list();
      expect_op(")");
    }
    table_alias(src);
    if (peek().is_word("INDEXED")) {
      advance();
      expect_word("BY");
      src.indexed = "INDEXED BY " + identifier("index name").text;
    } else if (peek().is_word("NOT") && peek(1).is_word("INDEXED")) {
      advance();
      advance();
      src.indexed = "NOT INDEXED";
    }
    src.span = span_from(b);
    return src;
  }

  // ---- ORDER BY ---------------------------------------------------------

  std::vector<OrderTerm> order_terms() {
    std::vector<OrderTerm> terms;
    do {
      if (!terms.empty()) advance();
      OrderTerm t;
      const auto b = begin();
      t.expr = expr();
      if (peek().is_word("ASC") || peek().is_word("DESC")) t.direction = advance().upper;
      if (peek().is_word("NULLS")) {
        advance();
        if (peek().is_word("FIRST")) {
          advance();
          t.nulls = "NULLS FIRST";
        } else {
          expect_word("LAST");
          t.nulls = "NULLS LAST";
        }
      }
      t.span = span_from(b);
      terms.push_back(std::move(t));
    } while (peek().is_op(","));
    return terms;
  }

  std::vector<Expr> expr_list() {
    std::vector<Expr> out;
    out.push_back(expr());
    while (peek().is_op(",")) {
      advance();
      out.push_back(expr());
    }
    return out;
  }

  // ---- expressions ------------------------------------------------------

  Expr expr() { return or_expr(); }

  Expr binary(std::string op, Expr lhs, Expr rhs, std::uint32_t b) {
    Expr e;
    e.kind = ExprKind::Binary;
    e.op = std::move(op);
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    e.span = span_from(b);
    return e;
  }

  Expr or_expr() {
    const auto b = begin();
    auto lhs = and_expr();
    while (peek().is_word("OR")) {
      advance();
      auto rhs = and_expr();
      lhs = binary("OR", std::move(lhs), std::move(rhs), b);
    }
    return lhs;
  }

  Expr and_expr() {
    const auto b = begin();
    auto lhs = not_expr();
    while (peek().is_word("AND")) {
      advance();
      auto rhs = not_expr();
      lhs = binary("AND", std::move(lhs), std::move(rhs), b);
    }
    return lhs;
  }

  Expr not_expr() {
    if (peek().is_word("NOT")) {
      const auto b = begin();
      advance();
      Expr e;
      e.kind = ExprKind::Unary;
      e.op = "NOT";
      e.args.push_back(not_expr());
      e.span = span_from(b);
      return e;
    }
    return equality_expr();
  }

  // = == != <> IS IN LIKE GLOB MATCH REGEXP BETWEEN ISNULL NOTNULL NOT NULL
  Expr equality_expr() {
    const auto b = begin();
    auto lhs = comparison_expr();
    while (true) {
      const auto& t = peek();
      if (t.is_op("=") || t.is_op("==") || t.is_op("!=") || t.is_op("<>")) {
        auto op = std::string(advance().text);
        auto rhs = comparison_expr();
        lhs = binary(op, std::move(lhs), std::move(rhs), b);
        continue;
      }
      if (t.is_word("IS")) {
        advance();
        std::string op = "IS";
        if (peek().is_word("NOT")) {
          advance();
          op = "IS NOT";
        }
        if (peek().is_word("DISTINCT")) {
          advance();
          expect_word("FROM");
          op = op == "IS" ? "IS DISTINCT FROM" : "IS NOT DISTINCT FROM";
        }
        auto rhs = comparison_expr();
        lhs = binary(op, std::move(lhs), std::move(rhs), b);
        continue;
      }
      if (t.is_word("ISNULL") || t.is_word("NOTNULL")) {
        Expr e;
        e.kind = ExprKind::Postfix;
        e.op = advance().upper;
        e.args.push_back(std::move(lhs));
        e.span = span_from(b);
        lhs = std::move(e);
        continue;
      }
      bool negated = false;
      std::size_t look = 0;
      if (t.is_word("NOT")) {
        if (peek(1).is_word("NULL")) {
          advance();
          advance();
          Expr e;
          e.kind = ExprKind::Postfix;
          e.op = "NOT NULL";
          e.args.push_back(std::move(lhs));
          e.span = span_from(b);
          lhs = std::move(e);
          continue;
        }
        negated = true;
        look = 1;
      }
      const auto& k = peek(look);
      if (k.is_word("IN")) {
        for (std::size_t i = 0; i <= look; ++i) advance();
        lhs = in_tail(std::move(lhs), negated, b);
        continue;
      }
      if (k.is_word("LIKE") || k.is_word("GLOB") || k.is_word("REGEXP") || k.is_word("MATCH")) {
        for (std::size_t i = 0; i < look; ++i) advance();
        Expr e;
        e.kind = ExprKind::Like;
        e.op = advance().upper;
        e.negated = negated;
        e.args.push_back(std::move(lhs));
        e.args.push_back(comparison_expr());
        if (peek().is_word("ESCAPE")) {
          advance();
          e.args.push_back(comparison_expr());
        }
        e.span = span_from(b);
        lhs = std::move(e);
        continue;
      }
      if (k.is_word("BETWEEN")) {
        for (std::size_t i = 0; i <= look; ++i) advance();
        Expr e;
        e.kind = ExprKind::Between;
        e.negated = negated;
        e.args.push_back(std::move(lhs));
        e.args.push_back(comparison_expr());
        expect_word("AND");
        e.args.push_back(comparison_expr());
        e.span = span_from(b);
        lhs = std::move(e);
        continue;
      }
      break;
    }
    return lhs;
  }

  Expr in_tail(Expr lhs, bool negated, std::uint32_t b) {
    Expr e;
    e.kind = ExprKind::In;
    e.negated = negated;
    e.args.push_back(std::move(lhs));
    expect_op("(");
    if (peek().is_word("SELECT") || peek().is_word("WITH") || peek().is_word("VALUES")) {
      e.subquery = Box<SelectStmt>(select_stmt());
    } else if (!peek().is_op(")")) {
      for (auto& item : expr_list()) e.args.push_back(std::move(item));
    }
    expect_op(")");
    e.span = span_from(b);
    return e;
  }

  Expr comparison_expr() {
    const auto b = begin();
    auto lhs = bitwise_expr();
    while (peek().is_op("<") || peek().is_op("<=") || peek().is_op(">") || peek().is_op(">=")) {
      auto op = std::string(advance().text);
      auto rhs = bitwise_expr();
      lhs = binary(op, std::move(lhs), std::move(rhs), b);
    }
    return lhs;
  }

  Expr bitwise_expr() {
    const auto b = begin();
    auto lhs = additive_expr();
    while (peek().is_op("&") || peek().is_op("|") || peek().is_op("<<") || peek().is_op(">>")) {
      auto op = std::string(advance().text);
      auto rhs = additive_expr();
      lhs = binary(op, std::move(lhs), std::move(rhs), b);
    }
    return lhs;
  }

  Expr additive_expr() {
    const auto b = begin();
    auto lhs = multiplicative_expr();
    while (peek().is_op("+") || peek().is_op("-")) {
      auto op = std::string(advance().text);
      auto rhs = multiplicative_expr();
      lhs = binary(op, std::move(lhs), std::move(rhs), b);
    }
    return lhs;
  }

  Expr multiplicative_expr() {
    const auto b = begin();
    auto lhs = concat_expr();
    while (peek().is_op("*") || peek().is_op("/") || peek().is_op("%")) {
      auto op = std::string(advance().text);
      auto rhs = concat_expr();
      lhs = binary(op, std::move(lhs), std::move(rhs), b);
    }
    return lhs;
  }

  Expr concat_expr() {
    const auto b = begin();
    auto lhs = collate_expr();
    while (peek().is_op("||") || peek().is_op("->") || peek().is_op("->>")) {
      auto op = std::string(advance().text);
      auto rhs = collate_expr();
      lhs = binary(op, std::move(lhs), std::move(rhs), b);
    }
    return lhs;
  }

  Expr collate_expr() {
    const auto b = begin();
    auto e = unary_expr();
    while (peek().is_word("COLLATE")) {
      advance();
      Expr c;
      c.kind = ExprKind::Collate;
      c.op = identifier("collation name").text;
      c.args.push_back(std::move(e));
      c.span = span_from(b);
      e = std::move(c);
    }
    return e;
  }

  Expr unary_expr() {
    if (peek().is_op("-") || peek().is_op("+") || peek().is_op("~")) {
      const auto b = begin();
      Expr e;
      e.kind = ExprKind::Unary;
      e.op = std::string(advance().text);
      e.args.push_back(unary_expr());
      e.span = span_from(b);
      return e;
    }
    return primary();
  }

  Expr primary() {
    const auto b = begin();
    const auto& t = peek();
    Expr e;
    switch (t.kind) {
      case TokenKind::Number:
      case TokenKind::String:
      case TokenKind::Blob:
        e.kind = ExprKind::Literal;
        e.text = std::string(advance().text);
        e.span = span_from(b);
        return e;
      case TokenKind::Param:
        e.kind = ExprKind::Param;
        e.text = std::string(advance().text);
        e.span = span_from(b);
        return e;
      case TokenKind::Op:
        if (t.is_op("(")) return paren_or_subquery();
        fail("expression");
      case TokenKind::End:
        fail("expression");
      default:
        break;
    }
    if (t.kind == TokenKind::Word) {
      const auto& u = t.upper;
      if (u == "NULL" || ((u == "TRUE" || u == "FALSE" || u == "CURRENT_TIME" || u == "CURRENT_DATE" ||
                           u == "CURRENT_TIMESTAMP") &&
                          !peek(1).is_op("(") && !peek(1).is_op("."))) {
        e.kind = ExprKind::Literal;
        e.text = advance().upper;
        e.span = span_from(b);
        return e;
      }
      if (u == "CAST" && peek(1).is_op("(")) return cast_expr();
      if (u == "CASE") return case_expr();
      if (u == "EXISTS" && peek(1).is_op("(")) {
        advance();
        advance();
        e.kind = ExprKind::Exists;
        e.subquery = Box<SelectStmt>(select_stmt());
        expect_op(")");
        e.span = span_from(b);
        return e;
      }
      if (peek(1).is_op("(") && (!is_reserved_word(u) || u == "LIKE" || u == "GLOB" || u == "REGEXP" ||
                                 u == "MATCH" || u == "LEFT" || u == "RIGHT")) {
        return function_call();
      }
    }
    if (!at_identifier()) fail("expression");
    e.kind = ExprKind::Column;
    e.path.push_back(identifier());
    while (peek().is_op(".") && e.path.size() < 3) {
      advance();
      e.path.push_back(identifier("column name"));
    }
    e.span = span_from(b);
    return e;
  }

  Expr paren_or_subquery() {
    const auto b = begin();
    expect_op("(");
    Expr e;
    if (peek().is_word("SELECT") || peek().is_word("WITH") || peek().is_word("VALUES")) {
      e.kind = ExprKind::Subquery;
      e.subquery = Box<SelectStmt>(select_stmt());
    } else {
      e.kind = ExprKind::Paren;
      e.args = expr_list();
    }
    expect_op(")");
    e.span = span_from(b);
    return e;
  }

  Expr cast_expr() {
    const auto b = begin();
    advance();
    expect_op("(");
    Expr e;
    e.kind = ExprKind::Cast;
    e.args.push_back(expr());
    expect_word("AS");
    e.text = type_name();
    expect_op(")");
    e.span = span_from(b);
    return e;
  }

  std::string type_name() {
    std::string out;
    if (peek().kind != TokenKind::Word && peek().kind != TokenKind::QuotedIdent) fail("type name");
    while (peek().kind == TokenKind::Word || peek().kind == TokenKind::QuotedIdent) {
      if (!out.empty()) out += ' ';
      const auto& t = advance();
      out += t.kind == TokenKind::Word ? t.upper : std::string(t.text);
    }
    if (peek().is_op("(")) {
      advance();
      out += '(';
      auto signed_number = [&] {
        std::string s;
        if (peek().is_op("-") || peek().is_op("+")) s += std::string(advance().text);
        if (peek().kind != TokenKind::Number) fail("number");
        s += std::string(advance().text);
        return s;
      };
      out += signed_number();
      if (peek().is_op(",")) {
        advance();
        out += ", " + signed_number();
      }
      expect_op(")");
      out += ')';
    }
    return out;
  }

  Expr case_expr() {
    const auto b = begin();
    expect_word("CASE");
    Expr e;
    e.kind = ExprKind::Case;
    if (!peek().is_word("WHEN")) {
      e.has_operand = true;
      e.args.push_back(expr());
    }
    if (!peek().is_word("WHEN")) fail("WHEN");
    while (peek().is_word("WHEN")) {
      advance();
      e.args.push_back(expr());
      expect_word("THEN");
      e.args.push_back(expr());
    }
    if (peek().is_word("ELSE")) {
      advance();
      e.has_else = true;
      e.args.push_back(expr());
    }
    expect_word("END");
    e.span = span_from(b);
    return e;
  }

  Expr function_call() {
    const auto b = begin();
    Expr e;
    e.kind = ExprKind::Function;
    e.text = advance().upper;
    expect_op("(");
    if (peek().is_op("*")) {
      const auto sb = begin();
      advance();
      Expr star;
      star.kind = ExprKind::Star;
      star.span = span_from(sb);
      e.args.push_back(std::move(star));
    } else if (!peek().is_op(")")) {
      if (peek().is_word("DISTINCT")) {
        advance();
        e.distinct = true;
      }
      e.args = expr_list();
    }
    expect_op(")");
    if (peek().is_word("FILTER")) {
      advance();
      expect_op("(");
      expect_word("WHERE");
      e.filter = Box<Expr>(expr());
      expect_op(")");
    }
    if (peek().is_word("OVER")) {
      advance();
      if (peek().is_op("(")) {
        advance();
        e.window = Box<WindowSpec>(window_spec());
        expect_op(")");
      } else {
        e.window_name = identifier("window name").text;
      }
    }
    e.span = span_from(b);
    return e;
  }

  WindowSpec window_spec() {
    WindowSpec w;
    if (at_identifier() && !peek().is_word("PARTITION") && !peek().is_word("ROWS") &&
        !peek().is_word("RANGE") && !peek().is_word("GROUPS")) {
      w.base = identifier().text;
    }
    if (peek().is_word("PARTITION")) {
      advance();
      expect_word("BY");
      w.partition_by = expr_list();
    }
    if (peek().is_word("ORDER")) {
      advance();
      expect_word("BY");
      w.order_by = order_terms();
    }
    if (peek().is_word("ROWS") || peek().is_word("RANGE") || peek().is_word("GROUPS")) {
      int depth = 0;
      while (peek().kind != TokenKind::End && !(depth == 0 && peek().is_op(")"))) {
        const auto& t = advance();
        if (t.is_op("(")) ++depth;
        if (t.is_op(")")) --depth;
        if (!w.frame.empty()) w.frame += ' ';
        w.frame += t.kind == TokenKind::Word ? t.upper : std::string(t.text);
      }
    }
    return w;
  }
};

}  // namespace

SelectStmt parse_select(std::string_view text) { return Parser(text).statement(); }

Expr parse_expression(std::string_view text) { return Parser(text).expression_only(); }

ResultColumn parse_result_column(std::string_view text) {
  auto cols = Parser(text).result_columns_only();
  if (cols.size() != 1) {
    throw SyntaxError(cols[1].span.begin, "end of input", "expected a single result column");
  }
  return std::move(cols.front());
}

std::vector<ResultColumn> parse_result_columns(std::string_view text) {
  return Parser(text).result_columns_only();
}

ClauseSet parse_clauses(std::string_view text) { return Parser(text).clauses_only(); }

bool starts_with_clause_keyword(std::string_view text) {
  std::vector<Token> toks;
  try {
    toks = tokenize(text);
  } catch (const SyntaxError&) {
    return false;
  }
  const auto& t = toks.front();
  return t.is_word("FROM") || t.is_word("WHERE") || t.is_word("GROUP") || t.is_word("HAVING") ||
         t.is_word("ORDER") || t.is_word("LIMIT") || t.is_word("DISTINCT");
}

}  // namespace sqlknow::sql
