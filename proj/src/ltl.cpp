#include "tocheck/ltl.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tocheck {

LtlPtr ltl_true() {
  auto f = std::make_shared<Ltl>();
  f->op = LtlOp::True;
  return f;
}

LtlPtr ltl_false() {
  auto f = std::make_shared<Ltl>();
  f->op = LtlOp::False;
  return f;
}

LtlPtr ltl_atom(int index) {
  auto f = std::make_shared<Ltl>();
  f->op = LtlOp::Atom;
  f->atom = index;
  return f;
}

LtlPtr ltl_unary(LtlOp op, LtlPtr a) {
  auto f = std::make_shared<Ltl>();
  f->op = op;
  f->lhs = std::move(a);
  return f;
}

LtlPtr ltl_binary(LtlOp op, LtlPtr a, LtlPtr b) {
  auto f = std::make_shared<Ltl>();
  f->op = op;
  f->lhs = std::move(a);
  f->rhs = std::move(b);
  return f;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class LtlParser {
 public:
  explicit LtlParser(std::string_view text) : toks_(tokenize(text)) {}

  LtlParseResult run() {
    LtlParseResult r;
    try {
      LtlPtr root = implies();
      if (peek().kind != Tok::End) fail({"end of formula"}, "trailing input after formula");
      r.formula = LtlFormula{root, atoms_};
    } catch (const ParseBail&) {
    }
    r.errors = std::move(errors_);
    if (!r.errors.empty()) r.formula.reset();
    return r;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t k = pos_ + ahead;
    return k < toks_.size() ? toks_[k] : toks_.back();
  }
  void advance() {
    if (pos_ + 1 < toks_.size()) ++pos_;
  }
  bool is_kw(const char* kw) const { return peek().kind == Tok::Ident && peek().text == kw; }

  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& msg) {
    const Token& t = peek();
    errors_.push_back(ParseError{t.span, std::move(expected), t.kind == Tok::End ? "end of input" : "'" + t.text + "'",
                                 msg});
    throw ParseBail{};
  }

  LtlPtr implies() {
    LtlPtr a = disj();
    if (peek().kind == Tok::Arrow) {
      advance();
      return ltl_binary(LtlOp::Implies, a, implies());
    }
    return a;
  }

  LtlPtr disj() {
    LtlPtr a = conj();
    while (peek().kind == Tok::OrOr) {
      advance();
      a = ltl_binary(LtlOp::Or, a, conj());
    }
    return a;
  }

  LtlPtr conj() {
    LtlPtr a = until();
    while (peek().kind == Tok::AndAnd) {
      advance();
      a = ltl_binary(LtlOp::And, a, until());
    }
    return a;
  }

  LtlPtr until() {
    LtlPtr a = unary();
    if (is_kw("U")) {
      advance();
      return ltl_binary(LtlOp::Until, a, until());
    }
    if (is_kw("R")) {
      advance();
      return ltl_binary(LtlOp::Release, a, until());
    }
    return a;
  }

  LtlPtr unary() {
    if (peek().kind == Tok::Bang) {
      advance();
      return ltl_unary(LtlOp::Not, unary());
    }
    if (is_kw("X")) {
      advance();
      return ltl_unary(LtlOp::Next, unary());
    }
    if (is_kw("F") || peek().kind == Tok::Diamond) {
      advance();
      return ltl_unary(LtlOp::Eventually, unary());
    }
    if (is_kw("G") || peek().kind == Tok::Box) {
      advance();
      return ltl_unary(LtlOp::Always, unary());
    }
    return primary();
  }

  static bool continues_expression(Tok k) {
    switch (k) {
      case Tok::Plus:
      case Tok::Minus:
      case Tok::Star:
      case Tok::Slash:
      case Tok::Percent:
      case Tok::Eq:
      case Tok::Ne:
      case Tok::Lt:
      case Tok::Le:
      case Tok::Gt:
      case Tok::Ge:
      case Tok::Question:
        return true;
      default:
        return false;
    }
  }

  LtlPtr primary() {
    if (peek().kind == Tok::LParen) {
      // A parenthesized formula, unless the parentheses turn out to group an
      // arithmetic operand such as `(a + b) <= 3`.
      const std::size_t saved_pos = pos_;
      const std::size_t saved_errors = errors_.size();
      const std::size_t saved_atoms = atoms_.size();
      try {
        advance();
        LtlPtr f = implies();
        if (peek().kind != Tok::RParen) fail({"')'"}, "unbalanced parentheses in formula");
        advance();
        if (!continues_expression(peek().kind)) return f;
      } catch (const ParseBail&) {
      }
      pos_ = saved_pos;
      errors_.resize(saved_errors);
      atoms_.resize(saved_atoms);
    }
    if (is_kw("true") && !continues_expression(peek(1).kind)) {
      advance();
      return ltl_true();
    }
    if (is_kw("false") && !continues_expression(peek(1).kind)) {
      advance();
      return ltl_false();
    }
    ExprParser ep(toks_, pos_, errors_);
    ep.formula_mode = true;
    ExprPtr e = ep.parse_comparison();
    return ltl_atom(intern(e));
  }

  int intern(const ExprPtr& e) {
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (expr_equal(atoms_[i], e)) return static_cast<int>(i);
    atoms_.push_back(e);
    return static_cast<int>(atoms_.size() - 1);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<ParseError> errors_;
  std::vector<ExprPtr> atoms_;
};

int ltl_prec(LtlOp op) {
  switch (op) {
    case LtlOp::Implies: return 1;
    case LtlOp::Or: return 2;
    case LtlOp::And: return 3;
    case LtlOp::Until:
    case LtlOp::Release: return 4;
    case LtlOp::Not:
    case LtlOp::Next:
    case LtlOp::Eventually:
    case LtlOp::Always: return 5;
    default: return 6;
  }
}

std::string render_rec(const LtlPtr& f, const std::vector<ExprPtr>& atoms) {
  auto sub = [&](const LtlPtr& g, bool parens) {
    std::string s = render_rec(g, atoms);
    return parens ? "(" + s + ")" : s;
  };
  const int p = ltl_prec(f->op);
  switch (f->op) {
    case LtlOp::True: return "true";
    case LtlOp::False: return "false";
    case LtlOp::Atom: {
      const ExprPtr& e = atoms[static_cast<std::size_t>(f->atom)];
      std::string s = render_expr(e);
      return precedence(e->op) <= 5 && precedence(e->op) != 5 ? "(" + s + ")" : s;
    }
    case LtlOp::Not: return "!" + sub(f->lhs, ltl_prec(f->lhs->op) < p);
    case LtlOp::Next: return "X " + sub(f->lhs, ltl_prec(f->lhs->op) < p);
    case LtlOp::Eventually: return "<> " + sub(f->lhs, ltl_prec(f->lhs->op) < p);
    case LtlOp::Always: return "[] " + sub(f->lhs, ltl_prec(f->lhs->op) < p);
    case LtlOp::Implies:
      return sub(f->lhs, ltl_prec(f->lhs->op) <= p) + " -> " + sub(f->rhs, ltl_prec(f->rhs->op) < p);
    case LtlOp::Until:
    case LtlOp::Release:
      return sub(f->lhs, ltl_prec(f->lhs->op) <= p) + (f->op == LtlOp::Until ? " U " : " R ") +
             sub(f->rhs, ltl_prec(f->rhs->op) < p);
    case LtlOp::And:
    case LtlOp::Or:
      return sub(f->lhs, ltl_prec(f->lhs->op) < p) + (f->op == LtlOp::And ? " && " : " || ") +
             sub(f->rhs, ltl_prec(f->rhs->op) <= p);
  }
  return "?";
}

}  // namespace

LtlParseResult parse_ltl(std::string_view text) { return LtlParser(text).run(); }

std::string render_ltl(const LtlFormula& f) { return render_rec(f.root, f.atoms); }

void resolve_ltl(const FlatModel& flat, LtlFormula& f) {
  for (auto& a : f.atoms) a = resolve_property_expr(flat, a);
}

// ---------------------------------------------------------------------------
// Normal form

LtlPtr negate(const LtlPtr& f) { return to_nnf(ltl_unary(LtlOp::Not, f)); }

LtlPtr to_nnf(const LtlPtr& f) {
  switch (f->op) {
    case LtlOp::True:
    case LtlOp::False:
    case LtlOp::Atom:
      return f;
    case LtlOp::And:
    case LtlOp::Or:
    case LtlOp::Until:
    case LtlOp::Release:
      return ltl_binary(f->op, to_nnf(f->lhs), to_nnf(f->rhs));
    case LtlOp::Implies:
      return ltl_binary(LtlOp::Or, negate(f->lhs), to_nnf(f->rhs));
    case LtlOp::Next:
      return ltl_unary(LtlOp::Next, to_nnf(f->lhs));
    case LtlOp::Eventually:
      return ltl_binary(LtlOp::Until, ltl_true(), to_nnf(f->lhs));
    case LtlOp::Always:
      return ltl_binary(LtlOp::Release, ltl_false(), to_nnf(f->lhs));
    case LtlOp::Not: {
      const LtlPtr& g = f->lhs;
      switch (g->op) {
        case LtlOp::True: return ltl_false();
        case LtlOp::False: return ltl_true();
        case LtlOp::Atom: return f;
        case LtlOp::Not: return to_nnf(g->lhs);
        case LtlOp::And: return ltl_binary(LtlOp::Or, negate(g->lhs), negate(g->rhs));
        case LtlOp::Or: return ltl_binary(LtlOp::And, negate(g->lhs), negate(g->rhs));
        case LtlOp::Implies: return ltl_binary(LtlOp::And, to_nnf(g->lhs), negate(g->rhs));
        case LtlOp::Next: return ltl_unary(LtlOp::Next, negate(g->lhs));
        case LtlOp::Until: return ltl_binary(LtlOp::Release, negate(g->lhs), negate(g->rhs));
        case LtlOp::Release: return ltl_binary(LtlOp::Until, negate(g->lhs), negate(g->rhs));
        case LtlOp::Eventually: return ltl_binary(LtlOp::Release, ltl_false(), negate(g->lhs));
        case LtlOp::Always: return ltl_binary(LtlOp::Until, ltl_true(), negate(g->lhs));
      }
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Tableau construction

namespace {

// Hash-consed NNF subformulas.
struct Closure {
  struct Node {
    LtlOp op;
    int atom;
    int lhs;
    int rhs;
    bool negated_atom;  // Not(Atom)
  };
  std::vector<Node> nodes;
  std::map<std::tuple<int, int, int, int, bool>, int> index;

  int add(LtlOp op, int atom, int lhs, int rhs, bool neg) {
    auto key = std::make_tuple(static_cast<int>(op), atom, lhs, rhs, neg);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(nodes.size());
    nodes.push_back(Node{op, atom, lhs, rhs, neg});
    index.emplace(key, id);
    return id;
  }

  int intern(const LtlPtr& f) {
    switch (f->op) {
      case LtlOp::True:
      case LtlOp::False:
        return add(f->op, -1, -1, -1, false);
      case LtlOp::Atom:
        return add(LtlOp::Atom, f->atom, -1, -1, false);
      case LtlOp::Not:
        if (f->lhs->op != LtlOp::Atom) throw std::logic_error("formula not in negation normal form");
        return add(LtlOp::Atom, f->lhs->atom, -1, -1, true);
      case LtlOp::Next:
        return add(LtlOp::Next, -1, intern(f->lhs), -1, false);
      case LtlOp::And:
      case LtlOp::Or:
      case LtlOp::Until:
      case LtlOp::Release: {
        int l = intern(f->lhs);
        int r = intern(f->rhs);
        return add(f->op, -1, l, r, false);
      }
      default:
        throw std::logic_error("formula not in negation normal form");
    }
  }
};

using Set = std::vector<bool>;

struct TNode {
  std::set<int> incoming;  // -1 denotes the initial pseudo-state
  Set fresh;
  Set old;
  Set next;
};

bool empty(const Set& s) { return std::find(s.begin(), s.end(), true) == s.end(); }

int first(const Set& s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i]) return static_cast<int>(i);
  return -1;
}

}  // namespace

Buchi build_buchi(const LtlPtr& formula) {
  Closure c;
  const int root = c.intern(to_nnf(formula));
  const std::size_t n = c.nodes.size();
  for (const auto& node : c.nodes)
    if (node.op == LtlOp::Atom && node.atom >= 64) throw std::invalid_argument("formula uses more than 64 atoms");

  struct Done {
    std::set<int> incoming;
    Set old;
    Set next;
  };
  std::vector<Done> done;
  std::vector<TNode> stack;
  {
    TNode init;
    init.incoming.insert(-1);
    init.fresh.assign(n, false);
    init.old.assign(n, false);
    init.next.assign(n, false);
    init.fresh[static_cast<std::size_t>(root)] = true;
    stack.push_back(std::move(init));
  }

  auto contradicts = [&](const Set& old, int id) {
    const auto& node = c.nodes[static_cast<std::size_t>(id)];
    if (node.op == LtlOp::False) return true;
    if (node.op != LtlOp::Atom) return false;
    auto key = std::make_tuple(static_cast<int>(LtlOp::Atom), node.atom, -1, -1, !node.negated_atom);
    auto it = c.index.find(key);
    return it != c.index.end() && old[static_cast<std::size_t>(it->second)];
  };
  auto add_fresh = [](TNode& t, int id) {
    if (id >= 0 && !t.old[static_cast<std::size_t>(id)]) t.fresh[static_cast<std::size_t>(id)] = true;
  };

  while (!stack.empty()) {
    TNode t = std::move(stack.back());
    stack.pop_back();
    if (empty(t.fresh)) {
      bool merged = false;
      for (auto& d : done)
        if (d.old == t.old && d.next == t.next) {
          d.incoming.insert(t.incoming.begin(), t.incoming.end());
          merged = true;
          break;
        }
      if (merged) continue;
      const int id = static_cast<int>(done.size());
      done.push_back(Done{t.incoming, t.old, t.next});
      TNode succ;
      succ.incoming.insert(id);
      succ.fresh = t.next;
      succ.old.assign(n, false);
      succ.next.assign(n, false);
      stack.push_back(std::move(succ));
      continue;
    }
    const int eta = first(t.fresh);
    t.fresh[static_cast<std::size_t>(eta)] = false;
    const auto node = c.nodes[static_cast<std::size_t>(eta)];
    switch (node.op) {
      case LtlOp::True:
        t.old[static_cast<std::size_t>(eta)] = true;
        stack.push_back(std::move(t));
        break;
      case LtlOp::False:
        break;
      case LtlOp::Atom:
        if (contradicts(t.old, eta)) break;
        t.old[static_cast<std::size_t>(eta)] = true;
        stack.push_back(std::move(t));
        break;
      case LtlOp::And:
        t.old[static_cast<std::size_t>(eta)] = true;
        add_fresh(t, node.lhs);
        add_fresh(t, node.rhs);
        stack.push_back(std::move(t));
        break;
      case LtlOp::Next:
        t.old[static_cast<std::size_t>(eta)] = true;
        t.next[static_cast<std::size_t>(node.lhs)] = true;
        stack.push_back(std::move(t));
        break;
      case LtlOp::Or:
      case LtlOp::Until:
      case LtlOp::Release: {
        t.old[static_cast<std::size_t>(eta)] = true;
        TNode a = t;
        TNode b = std::move(t);
        if (node.op == LtlOp::Or) {
          add_fresh(a, node.lhs);
          add_fresh(b, node.rhs);
        } else if (node.op == LtlOp::Until) {
          add_fresh(a, node.lhs);
          a.next[static_cast<std::size_t>(eta)] = true;
          add_fresh(b, node.rhs);
        } else {
          add_fresh(a, node.rhs);
          a.next[static_cast<std::size_t>(eta)] = true;
          add_fresh(b, node.lhs);
          add_fresh(b, node.rhs);
        }
        // Pushed in reverse so the left branch is expanded first.
        stack.push_back(std::move(b));
        stack.push_back(std::move(a));
        break;
      }
      default:
        throw std::logic_error("unexpected operator in tableau");
    }
  }

  // Generalized acceptance: one set per Until subformula.
  std::vector<int> untils;
  for (std::size_t i = 0; i < n; ++i)
    if (c.nodes[i].op == LtlOp::Until) untils.push_back(static_cast<int>(i));
  const std::size_t m = done.size();
  std::vector<std::vector<bool>> in_set(untils.size(), std::vector<bool>(m, false));
  for (std::size_t k = 0; k < untils.size(); ++k) {
    const int u = untils[k];
    const int rhs = c.nodes[static_cast<std::size_t>(u)].rhs;
    for (std::size_t q = 0; q < m; ++q)
      in_set[k][q] = !done[q].old[static_cast<std::size_t>(u)] || done[q].old[static_cast<std::size_t>(rhs)];
  }
  std::vector<std::vector<int>> succ(m);
  std::vector<int> initial;
  for (std::size_t q = 0; q < m; ++q)
    for (int from : done[q].incoming) {
      if (from < 0)
        initial.push_back(static_cast<int>(q));
      else
        succ[static_cast<std::size_t>(from)].push_back(static_cast<int>(q));
    }
  auto label = [&](std::size_t q, Buchi::State& s) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[q].old[i] || c.nodes[i].op != LtlOp::Atom) continue;
      std::uint64_t bit = std::uint64_t{1} << c.nodes[i].atom;
      if (c.nodes[i].negated_atom)
        s.neg |= bit;
      else
        s.pos |= bit;
    }
  };

  // Degeneralize with a round-robin counter over the acceptance sets.
  const std::size_t k = std::max<std::size_t>(untils.size(), 1);
  Buchi b;
  std::map<std::pair<int, std::size_t>, int> ids;
  std::deque<std::pair<int, std::size_t>> queue;
  auto get = [&](int q, std::size_t i) {
    auto key = std::make_pair(q, i);
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    int id = static_cast<int>(b.states.size());
    ids.emplace(key, id);
    Buchi::State s;
    label(static_cast<std::size_t>(q), s);
    s.accepting = untils.empty() || (i == 0 && in_set[0][static_cast<std::size_t>(q)]);
    b.states.push_back(s);
    queue.emplace_back(q, i);
    return id;
  };
  std::sort(initial.begin(), initial.end());
  for (int q : initial) b.initial.push_back(get(q, 0));
  while (!queue.empty()) {
    auto [q, i] = queue.front();
    queue.pop_front();
    const int from = ids.at({q, i});
    std::size_t j = i;
    if (!untils.empty() && in_set[i][static_cast<std::size_t>(q)]) j = (i + 1) % k;
    std::vector<int> targets = succ[static_cast<std::size_t>(q)];
    std::sort(targets.begin(), targets.end());
    for (int q2 : targets) {
      int to = get(q2, j);
      b.states[static_cast<std::size_t>(from)].succ.push_back(to);
    }
  }
  return b;
}

std::string dump_buchi(const Buchi& b) {
  std::vector<int> order(b.states.size(), -1);
  std::vector<int> seq;
  std::deque<int> queue;
  for (int q : b.initial)
    if (order[static_cast<std::size_t>(q)] < 0) {
      order[static_cast<std::size_t>(q)] = static_cast<int>(seq.size());
      seq.push_back(q);
      queue.push_back(q);
    }
  while (!queue.empty()) {
    int q = queue.front();
    queue.pop_front();
    for (int s : b.states[static_cast<std::size_t>(q)].succ)
      if (order[static_cast<std::size_t>(s)] < 0) {
        order[static_cast<std::size_t>(s)] = static_cast<int>(seq.size());
        seq.push_back(s);
        queue.push_back(s);
      }
  }
  std::ostringstream os;
  os << "states " << seq.size() << "\ninit";
  std::vector<int> init;
  for (int q : b.initial) init.push_back(order[static_cast<std::size_t>(q)]);
  std::sort(init.begin(), init.end());
  for (int q : init) os << " " << q;
  os << "\n";
  for (int q : seq) {
    const auto& s = b.states[static_cast<std::size_t>(q)];
    std::vector<int> succ;
    for (int t : s.succ) succ.push_back(order[static_cast<std::size_t>(t)]);
    std::sort(succ.begin(), succ.end());
    os << order[static_cast<std::size_t>(q)] << (s.accepting ? " acc" : "") << " pos=" << s.pos << " neg=" << s.neg
       << " ->";
    for (int t : succ) os << " " << t;
    os << "\n";
  }
  return os.str();
}

bool buchi_accepts(const Buchi& b, const std::vector<std::uint64_t>& word, std::size_t loop_start) {
  const std::size_t len = word.size();
  if (len == 0 || loop_start >= len) return false;
  const std::size_t nq = b.states.size();
  auto id = [&](std::size_t pos, int q) { return pos * nq + static_cast<std::size_t>(q); };
  auto next_pos = [&](std::size_t pos) { return pos + 1 == len ? loop_start : pos + 1; };

  std::vector<char> reach(len * nq, 0);
  std::vector<std::size_t> work;
  for (int q : b.initial)
    if (b.label_matches(q, word[0]) && !reach[id(0, q)]) {
      reach[id(0, q)] = 1;
      work.push_back(id(0, q));
    }
  auto successors = [&](std::size_t node, auto&& fn) {
    std::size_t pos = node / nq;
    int q = static_cast<int>(node % nq);
    std::size_t np = next_pos(pos);
    for (int q2 : b.states[static_cast<std::size_t>(q)].succ)
      if (b.label_matches(q2, word[np])) fn(id(np, q2));
  };
  while (!work.empty()) {
    std::size_t node = work.back();
    work.pop_back();
    successors(node, [&](std::size_t s) {
      if (!reach[s]) {
        reach[s] = 1;
        work.push_back(s);
      }
    });
  }
  // An accepting product node on a cycle witnesses acceptance.
  for (std::size_t node = 0; node < len * nq; ++node) {
    if (!reach[node] || !b.states[node % nq].accepting) continue;
    std::vector<char> seen(len * nq, 0);
    std::vector<std::size_t> stack;
    successors(node, [&](std::size_t s) {
      if (!seen[s]) {
        seen[s] = 1;
        stack.push_back(s);
      }
    });
    while (!stack.empty()) {
      std::size_t cur = stack.back();
      stack.pop_back();
      if (cur == node) return true;
      successors(cur, [&](std::size_t s) {
        if (!seen[s]) {
          seen[s] = 1;
          stack.push_back(s);
        }
      });
    }
  }
  return false;
}

}  // namespace tocheck
