#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tocheck/dsl.hpp"
#include "tocheck/model.hpp"

namespace tocheck {

enum class LtlOp { True, False, Atom, Not, And, Or, Implies, Next, Until, Release, Eventually, Always };

struct Ltl;
using LtlPtr = std::shared_ptr<const Ltl>;

struct Ltl {
  LtlOp op = LtlOp::True;
  int atom = -1;   // index into the atom table for Atom
  LtlPtr lhs;
  LtlPtr rhs;
};

LtlPtr ltl_true();
LtlPtr ltl_false();
LtlPtr ltl_atom(int index);
LtlPtr ltl_unary(LtlOp op, LtlPtr a);
LtlPtr ltl_binary(LtlOp op, LtlPtr a, LtlPtr b);

struct LtlFormula {
  LtlPtr root;
  std::vector<ExprPtr> atoms;  // state predicates; resolved after resolve_ltl
};

struct LtlParseResult {
  std::optional<LtlFormula> formula;
  std::vector<ParseError> errors;
};

// Grammar (lowest to highest precedence): `->` (right), `||`, `&&`, `U`/`R`
// (right), then prefix `!`, `X`, `F`/`<>`, `G`/`[]`. Atoms are relational
// expressions over the model's flat names.
LtlParseResult parse_ltl(std::string_view text);

std::string render_ltl(const LtlFormula& f);

// Resolves every atom against the flat model; throws FlattenError.
void resolve_ltl(const FlatModel& flat, LtlFormula& f);

// Negation normal form over True/False/Atom/Not(Atom)/And/Or/Next/Until/Release.
LtlPtr to_nnf(const LtlPtr& f);
LtlPtr negate(const LtlPtr& f);

// State-labelled Büchi automaton. A run q0 q1 ... reads w0 w1 ... when each
// w_i satisfies the label of q_i; it accepts when it visits `accepting`
// states infinitely often.
struct Buchi {
  struct State {
    std::uint64_t pos = 0;  // atoms that must hold
    std::uint64_t neg = 0;  // atoms that must not hold
    bool accepting = false;
    std::vector<int> succ;
  };
  std::vector<State> states;
  std::vector<int> initial;

  bool label_matches(int q, std::uint64_t valuation) const {
    const State& s = states[static_cast<std::size_t>(q)];
    return (valuation & s.pos) == s.pos && (valuation & s.neg) == 0;
  }
};

// Tableau construction followed by degeneralization. Accepts exactly the
// words satisfying `f` (which must use at most 64 atoms).
Buchi build_buchi(const LtlPtr& f);

// Canonical textual dump: states renumbered in BFS order from the initial
// states, successor lists sorted.
std::string dump_buchi(const Buchi& b);

// Whether the automaton accepts the ultimately periodic word: word[i] is the
// bitmask of atoms true at position i, positions >= loop_start repeat forever.
bool buchi_accepts(const Buchi& b, const std::vector<std::uint64_t>& word, std::size_t loop_start);

}  // namespace tocheck
