#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tocheck/model.hpp"

namespace tocheck {

struct ParseError {
  SourceSpan span;
  std::vector<std::string> expected;
  std::string found;
  std::string message;
};

std::string format_parse_error(const ParseError& e);

struct ParseResult {
  std::optional<Model> model;  // present when no errors were found
  std::vector<ParseError> errors;
};

// Parses a model file. The parser recovers at statement boundaries so that
// several independent errors are reported in one pass.
ParseResult parse_model(std::string_view text, const std::string& file = "");

struct ExprParseResult {
  ExprPtr expr;
  std::vector<ParseError> errors;
};

ExprParseResult parse_expression(std::string_view text);

// Thrown internally by the recursive-descent parsers after an error has been
// recorded, to unwind to the nearest recovery point.
struct ParseBail {};

std::string render(const Model& model);

// ---------------------------------------------------------------------------
// Tokens, shared with the temporal-formula parser.

enum class Tok {
  End,
  Ident,
  Int,
  LParen,
  RParen,
  LBracket,
  RBracket,
  LBrace,
  RBrace,
  Comma,
  Semi,
  Colon,
  Dot,
  DotDot,
  At,
  Arrow,    // ->
  Assign,   // :=
  Plus,
  Minus,
  Star,
  Slash,
  Percent,
  Eq,       // ==
  Ne,       // !=
  Lt,
  Le,
  Gt,
  Ge,
  AndAnd,
  OrOr,
  Bang,
  Question,
  Box,      // []
  Diamond,  // <>
  Equals,   // =
  Error,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t value = 0;
  SourceSpan span;
  std::size_t offset = 0;  // byte offset of the first character
  std::size_t size = 0;
};

std::vector<Token> tokenize(std::string_view text, const std::string& file = "");
std::string describe(Tok kind);

// Recursive-descent expression parsing over a token stream. Parsing stops at
// the first token that cannot continue the expression.
class ExprParser {
 public:
  ExprParser(const std::vector<Token>& toks, std::size_t& pos, std::vector<ParseError>& errors)
      : toks_(toks), pos_(pos), errors_(errors) {}

  ExprPtr parse();            // full expression
  ExprPtr parse_comparison();  // a relational expression or a single operand

  // In temporal formulas the boolean connectives belong to the formula layer.
  bool formula_mode = false;

 private:
  const Token& peek(std::size_t ahead = 0) const;
  const Token& advance();
  bool accept(Tok k);
  bool expect(Tok k, const char* what);

  ExprPtr parse_cond();
  ExprPtr parse_implies();
  ExprPtr parse_or();
  ExprPtr parse_and();
  ExprPtr parse_additive();
  ExprPtr parse_multiplicative();
  ExprPtr parse_unary();
  ExprPtr parse_primary();

  const std::vector<Token>& toks_;
  std::size_t& pos_;
  std::vector<ParseError>& errors_;
};

}  // namespace tocheck
