#include "sqlknow/sql/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "sqlknow/errors.hpp"

namespace sqlknow::sql {
namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

constexpr std::array<std::string_view, 46> kReserved = {
    "ALL",     "AND",       "AS",     "BETWEEN", "BY",        "CASE",    "CAST",   "COLLATE",
    "CROSS",   "DISTINCT",  "ELSE",   "END",     "ESCAPE",    "EXCEPT",  "EXISTS", "FROM",
    "FULL",    "GLOB",      "GROUP",  "HAVING",  "IN",        "INNER",   "INTERSECT", "IS",
    "ISNULL",  "JOIN",      "LEFT",   "LIKE",    "LIMIT",     "NATURAL", "NOT",    "NOTNULL",
    "NULL",    "OFFSET",    "ON",     "OR",      "ORDER",     "OUTER",   "REGEXP", "RIGHT",
    "SELECT",  "THEN",      "UNION",  "USING",   "VALUES",    "WHERE",
};

}  // namespace

bool is_reserved_word(std::string_view upper) {
  if (upper == "WHEN" || upper == "WITH" || upper == "WINDOW" || upper == "MATCH") return true;
  return std::find(kReserved.begin(), kReserved.end(), upper) != kReserved.end();
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  auto push = [&](TokenKind kind, std::size_t begin, std::size_t end) {
    Token t;
    t.kind = kind;
    t.text = src.substr(begin, end - begin);
    t.span = {static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(end)};
    if (kind == TokenKind::Word) t.upper = to_upper(t.text);
    out.push_back(std::move(t));
  };

  while (i < n) {
    const auto c = static_cast<unsigned char>(src[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && src[i + 1] == '-') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      auto close = src.find("*/", i + 2);
      if (close == std::string_view::npos) throw SyntaxError(i, "*/", "unterminated comment");
      i = close + 2;
      continue;
    }
    const std::size_t start = i;
    if ((c == 'x' || c == 'X') && i + 1 < n && src[i + 1] == '\'') {
      i += 2;
      while (i < n && src[i] != '\'') ++i;
      if (i >= n) throw SyntaxError(start, "'", "unterminated blob literal");
      ++i;
      push(TokenKind::Blob, start, i);
      continue;
    }
    if (is_ident_start(c)) {
      while (i < n && is_ident_char(static_cast<unsigned char>(src[i]))) ++i;
      push(TokenKind::Word, start, i);
      continue;
    }
    if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      if (c == '0' && i + 1 < n && (src[i + 1] == 'x' || src[i + 1] == 'X')) {
        i += 2;
        while (i < n && std::isxdigit(static_cast<unsigned char>(src[i]))) ++i;
      } else {
        while (i < n && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
        if (i < n && src[i] == '.') {
          ++i;
          while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
        }
        if (i < n && (src[i] == 'e' || src[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < n && (src[j] == '+' || src[j] == '-')) ++j;
          if (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) {
            i = j;
            while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
          }
        }
      }
      push(TokenKind::Number, start, i);
      continue;
    }
    if (c == '\'') {
      ++i;
      while (true) {
        if (i >= n) throw SyntaxError(start, "'", "unterminated string literal");
        if (src[i] == '\'') {
          if (i + 1 < n && src[i + 1] == '\'') {
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        ++i;
      }
      push(TokenKind::String, start, i);
      continue;
    }
    if (c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : static_cast<char>(c);
      ++i;
      while (true) {
        if (i >= n) throw SyntaxError(start, std::string(1, close), "unterminated quoted identifier");
        if (src[i] == close) {
          if (close != ']' && i + 1 < n && src[i + 1] == close) {
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        ++i;
      }
      push(TokenKind::QuotedIdent, start, i);
      continue;
    }
    if (c == '?') {
      ++i;
      while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      push(TokenKind::Param, start, i);
      continue;
    }
    if ((c == ':' || c == '@' || c == '$') && i + 1 < n && is_ident_start(static_cast<unsigned char>(src[i + 1]))) {
      ++i;
      while (i < n && is_ident_char(static_cast<unsigned char>(src[i]))) ++i;
      push(TokenKind::Param, start, i);
      continue;
    }
    static constexpr std::array<std::string_view, 9> kTwo = {"||", "<=", ">=", "==", "!=",
                                                             "<>", "<<", ">>", "->"};
    if (src.substr(i, 3) == "->>") {
      i += 3;
      push(TokenKind::Op, start, i);
      continue;
    }
    bool matched = false;
    for (auto op : kTwo) {
      if (src.substr(i, 2) == op) {
        i += 2;
        push(TokenKind::Op, start, i);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("(),.;+-*/%<>=&|~").find(static_cast<char>(c)) != std::string_view::npos) {
      ++i;
      push(TokenKind::Op, start, i);
      continue;
    }
    throw SyntaxError(i, "token", "unexpected character '" + std::string(1, static_cast<char>(c)) + "'");
  }
  Token end;
  end.kind = TokenKind::End;
  end.span = {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n)};
  out.push_back(end);
  return out;
}

std::vector<std::string> split_statements(std::string_view source) {
  std::vector<std::string> out;
  auto tokens = tokenize(source);
  std::size_t stmt_begin = 0;
  bool has_content = false;
  int depth = 0;
  int case_depth = 0;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::End) break;
    if (t.is_op("(")) ++depth;
    if (t.is_op(")")) --depth;
    if (t.is_word("CASE")) ++case_depth;
    if (t.is_word("END") && case_depth > 0) --case_depth;
    if (t.is_op(";") && depth == 0 && case_depth == 0) {
      if (has_content) {
        auto text = std::string(source.substr(stmt_begin, t.span.begin - stmt_begin));
        out.push_back(std::move(text));
      }
      stmt_begin = t.span.end;
      has_content = false;
      continue;
    }
    if (!has_content) {
      stmt_begin = t.span.begin;
      has_content = true;
    }
  }
  if (has_content) out.emplace_back(source.substr(stmt_begin));
  for (auto& s : out) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  }
  return out;
}

}  // namespace sqlknow::sql
