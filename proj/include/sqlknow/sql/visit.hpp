#pragma once

#include "sqlknow/sql/ast.hpp"

namespace sqlknow::sql {

// Calls fn(expr) for every top-level expression slot of `core`, including
// JOIN ... ON conditions. Subqueries are not entered.
template <class F>
void for_each_core_expr(const SelectCore& core, F&& fn);

// Calls fn(stmt) for `stmt` and every statement nested in it: CTE bodies,
// derived tables, and expression subqueries. Parents are visited first.
template <class F>
void for_each_stmt(const SelectStmt& stmt, F&& fn);

template <class F>
void for_each_stmt_mut(SelectStmt& stmt, F&& fn);

namespace detail {

template <class From, class F>
void for_each_from_expr(From& from, F&& fn) {
  auto source = [&](auto& s) {
    for (auto& a : s.fn_args) fn(a);
    if (s.group) for_each_from_expr(*s.group, fn);
  };
  source(from.first);
  for (auto& j : from.joins) {
    source(j.source);
    if (j.on) fn(*j.on);
  }
}

template <class Core, class F>
void for_each_core_expr_impl(Core& core, F&& fn) {
  for (auto& c : core.columns) fn(c.expr);
  if (core.from) for_each_from_expr(*core.from, fn);
  if (core.where) fn(*core.where);
  for (auto& g : core.group_by) fn(g);
  if (core.having) fn(*core.having);
  for (auto& row : core.values) {
    for (auto& v : row) fn(v);
  }
}

template <class E, class F>
void walk_expr_any(E& e, F&& fn) {
  fn(e);
  for (auto& a : e.args) walk_expr_any(a, fn);
  if (e.filter) walk_expr_any(*e.filter, fn);
  if (e.window) {
    for (auto& p : e.window->partition_by) walk_expr_any(p, fn);
    for (auto& o : e.window->order_by) walk_expr_any(o.expr, fn);
  }
}

template <class S, class F>
void for_each_stmt_impl(S& stmt, F& fn);

template <class From, class F>
void for_each_from_stmt(From& from, F& fn) {
  auto source = [&](auto& s) {
    if (s.subquery) for_each_stmt_impl(*s.subquery, fn);
    if (s.group) for_each_from_stmt(*s.group, fn);
  };
  source(from.first);
  for (auto& j : from.joins) source(j.source);
}

template <class S, class F>
void for_each_stmt_impl(S& stmt, F& fn) {
  fn(stmt);
  if (stmt.with) {
    for (auto& c : stmt.with->ctes) for_each_stmt_impl(*c.body, fn);
  }
  auto expr_hook = [&](auto& top) {
    walk_expr_any(top, [&](auto& e) {
      if (e.subquery) for_each_stmt_impl(*e.subquery, fn);
    });
  };
  for (auto& core : stmt.cores) {
    if (core.from) for_each_from_stmt(*core.from, fn);
    for_each_core_expr_impl(core, expr_hook);
  }
  for (auto& o : stmt.order_by) expr_hook(o.expr);
  if (stmt.limit) expr_hook(*stmt.limit);
  if (stmt.offset) expr_hook(*stmt.offset);
}

}  // namespace detail

template <class F>
void for_each_core_expr(const SelectCore& core, F&& fn) {
  detail::for_each_core_expr_impl(core, fn);
}

template <class F>
void for_each_stmt(const SelectStmt& stmt, F&& fn) {
  detail::for_each_stmt_impl(stmt, fn);
}

template <class F>
void for_each_stmt_mut(SelectStmt& stmt, F&& fn) {
  detail::for_each_stmt_impl(stmt, fn);
}

// Mutable pre-order walk over an expression tree; does not enter subqueries.
template <class F>
void walk_expr_mut(Expr& e, F&& fn) {
  detail::walk_expr_any(e, fn);
}

}  // namespace sqlknow::sql
