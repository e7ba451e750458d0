#pragma once

#include <bitset>
#include <cstdint>
#include <string>
#include <vector>

#include "tocheck/ltl.hpp"

namespace tocheck::testing {

// Number of AST nodes.
int ltl_size(const LtlPtr& f);

// Prints atoms as p, q, r, ... with full parenthesisation.
std::string ltl_to_string(const LtlPtr& f);

// Direct semantics on the ultimately periodic word word[0..loop_start)
// (word[loop_start..])^omega, by fixpoint iteration over the positions.
bool eval_lasso(const LtlPtr& f, const std::vector<std::uint64_t>& word, std::size_t loop_start);

// Every formula with exactly `size` nodes over atoms 0..atoms-1, built from
// true, false, atoms and all unary and binary operators.
std::vector<LtlPtr> enumerate_formulas(int size, int atoms);

struct LassoMismatch {
  std::vector<std::uint64_t> stem;
  std::vector<std::uint64_t> loop;
  bool semantic = false;
  bool automaton = false;
};

struct LassoAgreement {
  std::size_t words = 0;
  std::size_t mismatches = 0;
  std::vector<LassoMismatch> examples;  // at most a few
};

// Compares build_buchi(f), or `automaton` when given, with eval_lasso on every word stem.loop^omega with
// |stem| <= max_stem and 1 <= |loop| <= max_loop over 2^atoms letters.
// Words sharing a loop are evaluated together, one bit per stem.
class LassoSpace {
 public:
  LassoSpace(int atoms, int max_stem, int max_loop);
  LassoAgreement check(const LtlPtr& f, const Buchi* automaton = nullptr) const;
  std::size_t words() const;

 private:
  using Bits = std::bitset<256>;
  int atoms_;
  int letters_;
  int max_stem_;
  std::vector<std::vector<std::uint64_t>> loops_;
  std::vector<std::size_t> stem_counts_;  // letters^s
  std::vector<Bits> all_;                 // [s]: every stem of length s
  // [s][j][c]: stems of length s whose letter at position j is c (or, for
  // atom_mask_, whose letter at j contains atom c).
  std::vector<std::vector<std::vector<Bits>>> letter_mask_;
  std::vector<std::vector<std::vector<Bits>>> atom_mask_;
};

}  // namespace tocheck::testing
