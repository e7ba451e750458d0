#include "tocheck/expr.hpp"

#include <fmt/format.h>

namespace tocheck {

std::string format_span(const SourceSpan& span) {
  if (span.line == 0) return span.file.empty() ? std::string("<unknown>") : span.file;
  return fmt::format("{}:{}:{}", span.file.empty() ? "<input>" : span.file, span.line, span.col);
}

namespace {

std::shared_ptr<Expr> node(Op op) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  return e;
}

}  // namespace

ExprPtr make_const(std::int64_t v) {
  auto e = node(Op::Const);
  e->value = v;
  return e;
}

ExprPtr make_ref(std::string name) {
  auto e = node(Op::Ref);
  e->name = std::move(name);
  return e;
}

ExprPtr make_qualified_ref(std::string qualifier, ExprPtr index, std::string name) {
  auto e = node(Op::Ref);
  e->name = std::move(name);
  e->qualifier = std::move(qualifier);
  if (index) {
    e->indexed = true;
    e->args.push_back(std::move(index));
  }
  return e;
}

ExprPtr make_loc_at(std::string qualifier, ExprPtr index, std::string location) {
  auto e = node(Op::LocAt);
  e->name = std::move(location);
  e->qualifier = std::move(qualifier);
  if (index) {
    e->indexed = true;
    e->args.push_back(std::move(index));
  }
  return e;
}

ExprPtr make_unary(Op op, ExprPtr a) {
  auto e = node(op);
  e->args = {std::move(a)};
  return e;
}

ExprPtr make_binary(Op op, ExprPtr a, ExprPtr b) {
  auto e = node(op);
  e->args = {std::move(a), std::move(b)};
  return e;
}

ExprPtr make_cond(ExprPtr c, ExprPtr a, ExprPtr b) {
  auto e = node(Op::Cond);
  e->args = {std::move(c), std::move(a), std::move(b)};
  return e;
}

ExprPtr make_quantifier(Op op, std::string var, ExprPtr lo, ExprPtr hi, ExprPtr body) {
  auto e = node(op);
  e->name = std::move(var);
  e->args = {std::move(lo), std::move(hi), std::move(body)};
  return e;
}

ExprPtr make_resolved(Slot slot, std::string display) {
  auto e = node(slot.kind == SlotKind::Location ? Op::LocAt : Op::Ref);
  e->slot = slot;
  e->name = std::move(display);
  return e;
}

bool expr_equal(const Expr* a, const Expr* b) {
  if (a == b) return true;
  if (!a || !b) {
    // A missing guard means "true".
    const Expr* present = a ? a : b;
    return present->op == Op::Const && present->value == 1;
  }
  if (a->op != b->op || a->value != b->value || a->name != b->name || a->qualifier != b->qualifier ||
      a->indexed != b->indexed || a->slot != b->slot || a->args.size() != b->args.size())
    return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!expr_equal(a->args[i].get(), b->args[i].get())) return false;
  return true;
}

bool is_true_literal(const ExprPtr& e) { return !e || (e->op == Op::Const && e->value == 1); }

int precedence(Op op) {
  switch (op) {
    case Op::Forall:
    case Op::Exists:
      return 0;
    case Op::Cond:
      return 1;
    case Op::Implies:
      return 2;
    case Op::Or:
      return 3;
    case Op::And:
      return 4;
    case Op::Eq:
    case Op::Ne:
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge:
      return 5;
    case Op::Add:
    case Op::Sub:
      return 6;
    case Op::Mul:
    case Op::Div:
    case Op::Mod:
      return 7;
    case Op::Neg:
    case Op::Not:
      return 8;
    default:
      return 9;
  }
}

namespace {

const char* op_symbol(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Mod: return "%";
    case Op::Eq: return "==";
    case Op::Ne: return "!=";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::And: return "&&";
    case Op::Or: return "||";
    case Op::Implies: return "->";
    default: return "?";
  }
}

std::string wrap(const Expr& e, bool parens) {
  std::string s = render_expr(e);
  return parens ? "(" + s + ")" : s;
}

std::string render_qualifier(const Expr& e) {
  if (e.qualifier.empty()) return "";
  if (e.indexed) return e.qualifier + "[" + render_expr(*e.args[0]) + "]";
  return e.qualifier;
}

}  // namespace

std::string render_expr(const Expr& e) {
  const int p = precedence(e.op);
  switch (e.op) {
    case Op::Const:
      return std::to_string(e.value);
    case Op::Ref: {
      std::string q = render_qualifier(e);
      return q.empty() ? e.name : q + "." + e.name;
    }
    case Op::LocAt:
      if (e.slot.kind == SlotKind::Location && e.qualifier.empty()) return e.name;
      return render_qualifier(e) + "@" + e.name;
    case Op::Neg: {
      const Expr& a = *e.args[0];
      bool parens = precedence(a.op) < p || a.op == Op::Const || a.op == Op::Neg;
      return "-" + wrap(a, parens);
    }
    case Op::Not: {
      const Expr& a = *e.args[0];
      return "!" + wrap(a, precedence(a.op) < p);
    }
    case Op::Min:
    case Op::Max:
      return std::string(e.op == Op::Min ? "min(" : "max(") + render_expr(*e.args[0]) + ", " +
             render_expr(*e.args[1]) + ")";
    case Op::Cond: {
      const Expr& c = *e.args[0];
      const Expr& a = *e.args[1];
      const Expr& b = *e.args[2];
      return wrap(c, precedence(c.op) <= p) + " ? " + wrap(a, precedence(a.op) <= p) + " : " +
             wrap(b, precedence(b.op) < p);
    }
    case Op::Forall:
    case Op::Exists:
      return std::string(e.op == Op::Forall ? "forall " : "exists ") + e.name + " in " +
             wrap(*e.args[0], precedence(e.args[0]->op) <= 6) + ".." +
             wrap(*e.args[1], precedence(e.args[1]->op) <= 6) + " : " + render_expr(*e.args[2]);
    case Op::Implies: {
      const Expr& a = *e.args[0];
      const Expr& b = *e.args[1];
      return wrap(a, precedence(a.op) <= p) + " -> " + wrap(b, precedence(b.op) < p);
    }
    case Op::Eq:
    case Op::Ne:
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge: {
      const Expr& a = *e.args[0];
      const Expr& b = *e.args[1];
      return wrap(a, precedence(a.op) <= p) + " " + op_symbol(e.op) + " " + wrap(b, precedence(b.op) <= p);
    }
    default: {
      const Expr& a = *e.args[0];
      const Expr& b = *e.args[1];
      return wrap(a, precedence(a.op) < p) + " " + op_symbol(e.op) + " " + wrap(b, precedence(b.op) <= p);
    }
  }
}

std::int64_t apply_binary(Op op, std::int64_t a, std::int64_t b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div:
      if (b == 0) throw ModelError("division by zero");
      return a / b;
    case Op::Mod:
      if (b == 0) throw ModelError("modulo by zero");
      return a % b;
    case Op::Eq: return a == b;
    case Op::Ne: return a != b;
    case Op::Lt: return a < b;
    case Op::Le: return a <= b;
    case Op::Gt: return a > b;
    case Op::Ge: return a >= b;
    case Op::Min: return a < b ? a : b;
    case Op::Max: return a > b ? a : b;
    default: throw ModelError("not a binary operator");
  }
}

namespace {

struct NoState {
  [[noreturn]] static void fail() { throw ModelError("expression is not constant"); }
  std::int64_t var(int) const { fail(); }
  std::int64_t timing(int) const { fail(); }
  std::int64_t timeout(int) const { fail(); }
  int location(int) const { fail(); }
  std::int64_t sender() const { fail(); }
};

}  // namespace

std::int64_t eval_constant(const Expr& e) {
  if (e.op == Op::Ref && e.slot.kind == SlotKind::None)
    throw ModelError("'" + e.name + "' is not a constant");
  return eval(e, NoState{});
}

}  // namespace tocheck
