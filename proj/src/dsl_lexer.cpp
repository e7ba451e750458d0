#include <cctype>

#include <fmt/format.h>

#include "tocheck/dsl.hpp"

namespace tocheck {

std::string describe(Tok kind) {
  switch (kind) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "identifier";
    case Tok::Int: return "integer";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Semi: return "';'";
    case Tok::Colon: return "':'";
    case Tok::Dot: return "'.'";
    case Tok::DotDot: return "'..'";
    case Tok::At: return "'@'";
    case Tok::Arrow: return "'->'";
    case Tok::Assign: return "':='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Percent: return "'%'";
    case Tok::Eq: return "'=='";
    case Tok::Ne: return "'!='";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::AndAnd: return "'&&'";
    case Tok::OrOr: return "'||'";
    case Tok::Bang: return "'!'";
    case Tok::Question: return "'?'";
    case Tok::Box: return "'[]'";
    case Tok::Diamond: return "'<>'";
    case Tok::Equals: return "'='";
    case Tok::Error: return "invalid character";
  }
  return "token";
}

std::vector<Token> tokenize(std::string_view text, const std::string& file) {
  std::vector<Token> out;
  std::uint32_t line = 1;
  std::uint32_t col = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();

  auto bump = [&](std::size_t count) {
    for (std::size_t k = 0; k < count && i < n; ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < n) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      bump(1);
      continue;
    }
    if (c == '/' && i + 1 < n && text[i + 1] == '/') {
      while (i < n && text[i] != '\n') bump(1);
      continue;
    }
    if (c == '/' && i + 1 < n && text[i + 1] == '*') {
      bump(2);
      while (i < n && !(text[i] == '*' && i + 1 < n && text[i + 1] == '/')) bump(1);
      bump(2);
      continue;
    }

    Token t;
    t.span = SourceSpan{file, line, col, 1};
    t.offset = i;
    std::size_t len = 1;

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i + len < n && (std::isalnum(static_cast<unsigned char>(text[i + len])) || text[i + len] == '_')) ++len;
      t.kind = Tok::Ident;
      t.text = std::string(text.substr(i, len));
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i + len < n && std::isdigit(static_cast<unsigned char>(text[i + len]))) ++len;
      t.kind = Tok::Int;
      t.text = std::string(text.substr(i, len));
      try {
        t.value = std::stoll(t.text);
      } catch (const std::out_of_range&) {
        t.kind = Tok::Error;
      }
    } else {
      auto two = [&](char a, char b) { return c == a && i + 1 < n && text[i + 1] == b; };
      if (two('-', '>')) { t.kind = Tok::Arrow; len = 2; }
      else if (two(':', '=')) { t.kind = Tok::Assign; len = 2; }
      else if (two('.', '.')) { t.kind = Tok::DotDot; len = 2; }
      else if (two('=', '=')) { t.kind = Tok::Eq; len = 2; }
      else if (two('!', '=')) { t.kind = Tok::Ne; len = 2; }
      else if (two('<', '=')) { t.kind = Tok::Le; len = 2; }
      else if (two('>', '=')) { t.kind = Tok::Ge; len = 2; }
      else if (two('&', '&')) { t.kind = Tok::AndAnd; len = 2; }
      else if (two('|', '|')) { t.kind = Tok::OrOr; len = 2; }
      else if (two('[', ']')) { t.kind = Tok::Box; len = 2; }
      else if (two('<', '>')) { t.kind = Tok::Diamond; len = 2; }
      else {
        switch (c) {
          case '(': t.kind = Tok::LParen; break;
          case ')': t.kind = Tok::RParen; break;
          case '[': t.kind = Tok::LBracket; break;
          case ']': t.kind = Tok::RBracket; break;
          case '{': t.kind = Tok::LBrace; break;
          case '}': t.kind = Tok::RBrace; break;
          case ',': t.kind = Tok::Comma; break;
          case ';': t.kind = Tok::Semi; break;
          case ':': t.kind = Tok::Colon; break;
          case '.': t.kind = Tok::Dot; break;
          case '@': t.kind = Tok::At; break;
          case '+': t.kind = Tok::Plus; break;
          case '-': t.kind = Tok::Minus; break;
          case '*': t.kind = Tok::Star; break;
          case '/': t.kind = Tok::Slash; break;
          case '%': t.kind = Tok::Percent; break;
          case '<': t.kind = Tok::Lt; break;
          case '>': t.kind = Tok::Gt; break;
          case '!': t.kind = Tok::Bang; break;
          case '?': t.kind = Tok::Question; break;
          case '=': t.kind = Tok::Equals; break;
          default: t.kind = Tok::Error; break;
        }
      }
      t.text = std::string(text.substr(i, len));
    }
    t.size = len;
    t.span.length = static_cast<std::uint32_t>(len);
    out.push_back(std::move(t));
    bump(len);
  }
  Token end;
  end.kind = Tok::End;
  end.span = SourceSpan{file, line, col, 0};
  end.offset = n;
  out.push_back(end);
  return out;
}

std::string format_parse_error(const ParseError& e) {
  std::string msg = format_span(e.span) + ": error: " + e.message;
  if (!e.expected.empty()) {
    msg += " (expected ";
    for (std::size_t i = 0; i < e.expected.size(); ++i) {
      if (i) msg += i + 1 == e.expected.size() ? " or " : ", ";
      msg += e.expected[i];
    }
    msg += fmt::format(", found {})", e.found);
  }
  return msg;
}

// ---------------------------------------------------------------------------

const Token& ExprParser::peek(std::size_t ahead) const {
  std::size_t k = pos_ + ahead;
  return k < toks_.size() ? toks_[k] : toks_.back();
}

const Token& ExprParser::advance() {
  const Token& t = peek();
  if (pos_ + 1 < toks_.size()) ++pos_;
  return t;
}

bool ExprParser::accept(Tok k) {
  if (peek().kind != k) return false;
  advance();
  return true;
}

bool ExprParser::expect(Tok k, const char* what) {
  if (accept(k)) return true;
  const Token& t = peek();
  errors_.push_back(ParseError{t.span, {describe(k)}, t.kind == Tok::End ? "end of input" : "'" + t.text + "'",
                               std::string("unexpected token in ") + what});
  throw ParseBail{};
}

ExprPtr ExprParser::parse() {
  bool saved = formula_mode;
  formula_mode = false;
  ExprPtr e = parse_cond();
  formula_mode = saved;
  return e;
}

ExprPtr ExprParser::parse_cond() {
  ExprPtr c = parse_implies();
  if (peek().kind != Tok::Question) return c;
  advance();
  ExprPtr a = parse_cond();
  expect(Tok::Colon, "conditional expression");
  ExprPtr b = parse_cond();
  return make_cond(c, a, b);
}

ExprPtr ExprParser::parse_implies() {
  ExprPtr a = parse_or();
  if (peek().kind == Tok::Arrow) {
    advance();
    ExprPtr b = parse_implies();
    return make_binary(Op::Implies, a, b);
  }
  return a;
}

ExprPtr ExprParser::parse_or() {
  ExprPtr a = parse_and();
  while (peek().kind == Tok::OrOr) {
    advance();
    a = make_binary(Op::Or, a, parse_and());
  }
  return a;
}

ExprPtr ExprParser::parse_and() {
  ExprPtr a = parse_comparison();
  while (peek().kind == Tok::AndAnd) {
    advance();
    a = make_binary(Op::And, a, parse_comparison());
  }
  return a;
}

ExprPtr ExprParser::parse_comparison() {
  ExprPtr a = parse_additive();
  Op op;
  switch (peek().kind) {
    case Tok::Eq: op = Op::Eq; break;
    case Tok::Ne: op = Op::Ne; break;
    case Tok::Lt: op = Op::Lt; break;
    case Tok::Le: op = Op::Le; break;
    case Tok::Gt: op = Op::Gt; break;
    case Tok::Ge: op = Op::Ge; break;
    default: return a;
  }
  advance();
  return make_binary(op, a, parse_additive());
}

ExprPtr ExprParser::parse_additive() {
  ExprPtr a = parse_multiplicative();
  for (;;) {
    if (peek().kind == Tok::Plus) {
      advance();
      a = make_binary(Op::Add, a, parse_multiplicative());
    } else if (peek().kind == Tok::Minus) {
      advance();
      a = make_binary(Op::Sub, a, parse_multiplicative());
    } else {
      return a;
    }
  }
}

ExprPtr ExprParser::parse_multiplicative() {
  ExprPtr a = parse_unary();
  for (;;) {
    Op op;
    switch (peek().kind) {
      case Tok::Star: op = Op::Mul; break;
      case Tok::Slash: op = Op::Div; break;
      case Tok::Percent: op = Op::Mod; break;
      default: return a;
    }
    advance();
    a = make_binary(op, a, parse_unary());
  }
}

ExprPtr ExprParser::parse_unary() {
  if (peek().kind == Tok::Minus) {
    advance();
    if (peek().kind == Tok::Int) return make_const(-advance().value);
    return make_unary(Op::Neg, parse_unary());
  }
  if (peek().kind == Tok::Bang && !formula_mode) {
    advance();
    return make_unary(Op::Not, parse_unary());
  }
  return parse_primary();
}

ExprPtr ExprParser::parse_primary() {
  const Token& t = peek();
  if (t.kind == Tok::Int) {
    advance();
    auto e = std::const_pointer_cast<Expr>(make_const(t.value));
    e->span = t.span;
    return e;
  }
  if (t.kind == Tok::LParen) {
    advance();
    ExprPtr e = parse();
    expect(Tok::RParen, "parenthesized expression");
    return e;
  }
  if (t.kind == Tok::Ident) {
    const std::string name = t.text;
    const SourceSpan span = t.span;
    advance();
    if (name == "true") return make_const(1);
    if (name == "false") return make_const(0);
    if ((name == "min" || name == "max") && peek().kind == Tok::LParen) {
      advance();
      ExprPtr a = parse();
      expect(Tok::Comma, "min/max");
      ExprPtr b = parse();
      expect(Tok::RParen, "min/max");
      return make_binary(name == "min" ? Op::Min : Op::Max, a, b);
    }
    if ((name == "forall" || name == "exists") && peek().kind == Tok::Ident) {
      std::string var = advance().text;
      if (!(peek().kind == Tok::Ident && peek().text == "in")) expect(Tok::Ident, "quantifier ('in')");
      advance();
      ExprPtr lo = parse_additive();
      expect(Tok::DotDot, "quantifier range");
      ExprPtr hi = parse_additive();
      expect(Tok::Colon, "quantifier");
      bool saved = formula_mode;
      formula_mode = false;
      ExprPtr body = parse_cond();
      formula_mode = saved;
      return make_quantifier(name == "forall" ? Op::Forall : Op::Exists, var, lo, hi, body);
    }
    ExprPtr index;
    if (peek().kind == Tok::LBracket) {
      advance();
      index = parse();
      expect(Tok::RBracket, "process index");
    }
    if (peek().kind == Tok::Dot) {
      advance();
      const Token& member = peek();
      expect(Tok::Ident, "qualified name");
      auto e = std::const_pointer_cast<Expr>(make_qualified_ref(name, index, member.text));
      e->span = span;
      return e;
    }
    if (peek().kind == Tok::At) {
      advance();
      const Token& loc = peek();
      expect(Tok::Ident, "location test");
      auto e = std::const_pointer_cast<Expr>(make_loc_at(name, index, loc.text));
      e->span = span;
      return e;
    }
    if (index) {
      const Token& bad = peek();
      errors_.push_back(ParseError{bad.span, {"'.'", "'@'"}, "'" + bad.text + "'",
                                   "a process reference must be followed by a member or location"});
      throw ParseBail{};
    }
    auto e = std::const_pointer_cast<Expr>(make_ref(name));
    e->span = span;
    return e;
  }
  errors_.push_back(ParseError{t.span, {"expression"}, t.kind == Tok::End ? "end of input" : "'" + t.text + "'",
                               "expected an expression"});
  throw ParseBail{};
}

ExprParseResult parse_expression(std::string_view text) {
  ExprParseResult r;
  auto toks = tokenize(text);
  std::size_t pos = 0;
  ExprParser p(toks, pos, r.errors);
  try {
    r.expr = p.parse();
    if (toks[pos].kind != Tok::End) {
      r.errors.push_back(ParseError{toks[pos].span, {"end of expression"}, "'" + toks[pos].text + "'",
                                    "trailing input after expression"});
      r.expr = nullptr;
    }
  } catch (const ParseBail&) {
    r.expr = nullptr;
  }
  return r;
}

}  // namespace tocheck
