#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sqlknow/sql/ast.hpp"

namespace sqlknow::sql {

enum class TokenKind { Word, QuotedIdent, String, Number, Blob, Param, Op, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string_view text;
  Span span;
  std::string upper;  // uppercased text for Word tokens

  bool is_word(std::string_view kw) const noexcept { return kind == TokenKind::Word && upper == kw; }
  bool is_op(std::string_view op) const noexcept { return kind == TokenKind::Op && text == op; }
};

// Splits SQLite text into tokens, dropping whitespace and comments.
// Throws SyntaxError on unterminated strings, quoted identifiers, or comments.
std::vector<Token> tokenize(std::string_view source);

// Words that cannot be used as bare identifiers.
bool is_reserved_word(std::string_view upper);

// Splits a multi-statement script at top-level semicolons; empty statements are dropped.
std::vector<std::string> split_statements(std::string_view source);

}  // namespace sqlknow::sql
