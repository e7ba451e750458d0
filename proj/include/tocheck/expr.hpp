#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tocheck {

struct SourceSpan {
  std::string file;
  std::uint32_t line = 0;
  std::uint32_t col = 0;
  std::uint32_t length = 0;
};

std::string format_span(const SourceSpan& span);

// Raised when a model misbehaves during exploration: an assignment leaves its
// declared domain, an update rule admits no value, the calendar overflows, and
// similar conditions that static validation cannot rule out.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op {
  Const,
  Ref,      // identifier, optionally qualified by a process reference
  LocAt,    // Proc@Location
  Neg,
  Not,
  Add,
  Sub,
  Mul,
  Div,
  Mod,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  And,
  Or,
  Implies,
  Cond,     // a ? b : c
  Min,
  Max,
  Forall,   // forall k in lo..hi : body
  Exists,
};

// What a resolved reference points at inside a flat model.
enum class SlotKind {
  None,
  Var,       // index into FlatModel::vars
  Timing,    // index into FlatModel::timing
  Timeout,   // remaining timeout of process `index`
  Location,  // process `index` is at location `aux`
  Sender,    // family index of the sender on a calendar receive
};

struct Slot {
  SlotKind kind = SlotKind::None;
  int index = -1;
  int aux = -1;
  bool operator==(const Slot&) const = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  Op op = Op::Const;
  std::int64_t value = 0;
  std::string name;       // Ref identifier, LocAt location, Forall/Exists bound variable
  std::string qualifier;  // process name for qualified Ref / LocAt ("" when absent)
  std::vector<ExprPtr> args;  // operands; qualified refs keep the index as args[0] when `indexed`
  bool indexed = false;
  Slot slot;
  SourceSpan span;
};

ExprPtr make_const(std::int64_t v);
ExprPtr make_ref(std::string name);
ExprPtr make_qualified_ref(std::string qualifier, ExprPtr index, std::string name);
ExprPtr make_loc_at(std::string qualifier, ExprPtr index, std::string location);
ExprPtr make_unary(Op op, ExprPtr a);
ExprPtr make_binary(Op op, ExprPtr a, ExprPtr b);
ExprPtr make_cond(ExprPtr c, ExprPtr a, ExprPtr b);
ExprPtr make_quantifier(Op op, std::string var, ExprPtr lo, ExprPtr hi, ExprPtr body);
ExprPtr make_resolved(Slot slot, std::string display);

// Structural equality, ignoring spans.
bool expr_equal(const Expr* a, const Expr* b);
inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) { return expr_equal(a.get(), b.get()); }

bool is_true_literal(const ExprPtr& e);

// Rendering with minimal parentheses; parse(render(e)) is structurally equal to e.
std::string render_expr(const Expr& e);
inline std::string render_expr(const ExprPtr& e) { return e ? render_expr(*e) : std::string("true"); }

int precedence(Op op);

std::int64_t apply_binary(Op op, std::int64_t a, std::int64_t b);

// Evaluation against any state view providing the accessors used below.
// Unresolved references are a programming error at this point.
template <class View>
std::int64_t eval(const Expr& e, const View& v) {
  switch (e.op) {
    case Op::Const:
      return e.value;
    case Op::Ref:
    case Op::LocAt:
      switch (e.slot.kind) {
        case SlotKind::Var:
          return v.var(e.slot.index);
        case SlotKind::Timing:
          return v.timing(e.slot.index);
        case SlotKind::Timeout:
          return v.timeout(e.slot.index);
        case SlotKind::Location:
          return v.location(e.slot.index) == e.slot.aux ? 1 : 0;
        case SlotKind::Sender:
          return v.sender();
        case SlotKind::None:
          break;
      }
      throw ModelError("unresolved reference '" + e.name + "'");
    case Op::Neg:
      return -eval(*e.args[0], v);
    case Op::Not:
      return eval(*e.args[0], v) == 0 ? 1 : 0;
    case Op::And:
      return (eval(*e.args[0], v) != 0 && eval(*e.args[1], v) != 0) ? 1 : 0;
    case Op::Or:
      return (eval(*e.args[0], v) != 0 || eval(*e.args[1], v) != 0) ? 1 : 0;
    case Op::Implies:
      return (eval(*e.args[0], v) == 0 || eval(*e.args[1], v) != 0) ? 1 : 0;
    case Op::Cond:
      return eval(*e.args[0], v) != 0 ? eval(*e.args[1], v) : eval(*e.args[2], v);
    case Op::Forall:
    case Op::Exists:
      throw ModelError("quantifier survived resolution");
    default:
      return apply_binary(e.op, eval(*e.args[0], v), eval(*e.args[1], v));
  }
}

// Evaluates an expression that may only mention integer constants.
std::int64_t eval_constant(const Expr& e);

}  // namespace tocheck
