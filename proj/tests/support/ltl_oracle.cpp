#include "ltl_oracle.hpp"

#include <stdexcept>

namespace tocheck::testing {

namespace {

// Post-order node list; children precede parents, the root is last.
struct Node {
  LtlOp op;
  int atom;
  int lhs;
  int rhs;
};

int linearize(const LtlPtr& f, std::vector<Node>& out) {
  int l = f->lhs ? linearize(f->lhs, out) : -1;
  int r = f->rhs ? linearize(f->rhs, out) : -1;
  out.push_back({f->op, f->atom, l, r});
  return static_cast<int>(out.size()) - 1;
}

// Truth of every node at every position of a lasso; val[k * n + i] is node k
// at position i. Until is a least fixpoint, Release a greatest one.
void eval_positions(const std::vector<Node>& nodes, const std::vector<std::uint64_t>& word, std::size_t loop_start,
                    std::vector<char>& val) {
  const std::size_t n = word.size();
  auto succ = [&](std::size_t i) { return i + 1 < n ? i + 1 : loop_start; };
  val.assign(nodes.size() * n, 0);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Node& nd = nodes[k];
    char* v = val.data() + k * n;
    auto at = [&](int child, std::size_t i) -> bool { return val[static_cast<std::size_t>(child) * n + i] != 0; };
    switch (nd.op) {
      case LtlOp::True:
        std::fill(v, v + n, 1);
        break;
      case LtlOp::False:
        break;
      case LtlOp::Atom:
        for (std::size_t i = 0; i < n; ++i) v[i] = (word[i] >> nd.atom) & 1U;
        break;
      case LtlOp::Not:
        for (std::size_t i = 0; i < n; ++i) v[i] = !at(nd.lhs, i);
        break;
      case LtlOp::And:
        for (std::size_t i = 0; i < n; ++i) v[i] = at(nd.lhs, i) && at(nd.rhs, i);
        break;
      case LtlOp::Or:
        for (std::size_t i = 0; i < n; ++i) v[i] = at(nd.lhs, i) || at(nd.rhs, i);
        break;
      case LtlOp::Implies:
        for (std::size_t i = 0; i < n; ++i) v[i] = !at(nd.lhs, i) || at(nd.rhs, i);
        break;
      case LtlOp::Next:
        for (std::size_t i = 0; i < n; ++i) v[i] = at(nd.lhs, succ(i));
        break;
      case LtlOp::Until:
      case LtlOp::Eventually:
      case LtlOp::Release:
      case LtlOp::Always: {
        const bool until = nd.op == LtlOp::Until || nd.op == LtlOp::Eventually;
        // Eventually x == true U x, Always x == false R x.
        const bool unary = nd.op == LtlOp::Eventually || nd.op == LtlOp::Always;
        auto left = [&](std::size_t i) { return unary ? until : at(nd.lhs, i); };
        auto right = [&](std::size_t i) { return at(unary ? nd.lhs : nd.rhs, i); };
        std::fill(v, v + n, until ? 0 : 1);
        bool changed = true;
        while (changed) {
          changed = false;
          for (std::size_t i = n; i-- > 0;) {
            const bool nv = until ? (right(i) || (left(i) && v[succ(i)])) : (right(i) && (left(i) || v[succ(i)]));
            if (nv != (v[i] != 0)) {
              v[i] = nv;
              changed = true;
            }
          }
        }
        break;
      }
    }
  }
}

}  // namespace

int ltl_size(const LtlPtr& f) {
  if (!f) return 0;
  return 1 + ltl_size(f->lhs) + ltl_size(f->rhs);
}

std::string ltl_to_string(const LtlPtr& f) {
  switch (f->op) {
    case LtlOp::True:
      return "true";
    case LtlOp::False:
      return "false";
    case LtlOp::Atom:
      return std::string(1, static_cast<char>('p' + f->atom));
    case LtlOp::Not:
      return "!" + ltl_to_string(f->lhs);
    case LtlOp::Next:
      return "X " + ltl_to_string(f->lhs);
    case LtlOp::Eventually:
      return "F " + ltl_to_string(f->lhs);
    case LtlOp::Always:
      return "G " + ltl_to_string(f->lhs);
    case LtlOp::And:
      return "(" + ltl_to_string(f->lhs) + " && " + ltl_to_string(f->rhs) + ")";
    case LtlOp::Or:
      return "(" + ltl_to_string(f->lhs) + " || " + ltl_to_string(f->rhs) + ")";
    case LtlOp::Implies:
      return "(" + ltl_to_string(f->lhs) + " -> " + ltl_to_string(f->rhs) + ")";
    case LtlOp::Until:
      return "(" + ltl_to_string(f->lhs) + " U " + ltl_to_string(f->rhs) + ")";
    case LtlOp::Release:
      return "(" + ltl_to_string(f->lhs) + " R " + ltl_to_string(f->rhs) + ")";
  }
  return "?";
}

bool eval_lasso(const LtlPtr& f, const std::vector<std::uint64_t>& word, std::size_t loop_start) {
  if (loop_start >= word.size()) throw std::invalid_argument("empty loop");
  std::vector<Node> nodes;
  linearize(f, nodes);
  std::vector<char> val;
  eval_positions(nodes, word, loop_start, val);
  return val[(nodes.size() - 1) * word.size()] != 0;
}

std::vector<LtlPtr> enumerate_formulas(int size, int atoms) {
  std::vector<std::vector<LtlPtr>> by_size(static_cast<std::size_t>(size) + 1);
  for (int s = 1; s <= size; ++s) {
    auto& out = by_size[static_cast<std::size_t>(s)];
    if (s == 1) {
      out.push_back(ltl_true());
      out.push_back(ltl_false());
      for (int a = 0; a < atoms; ++a) out.push_back(ltl_atom(a));
      continue;
    }
    for (LtlOp op : {LtlOp::Not, LtlOp::Next, LtlOp::Eventually, LtlOp::Always})
      for (const auto& c : by_size[static_cast<std::size_t>(s - 1)]) out.push_back(ltl_unary(op, c));
    for (LtlOp op : {LtlOp::And, LtlOp::Or, LtlOp::Implies, LtlOp::Until, LtlOp::Release})
      for (int ls = 1; ls + 1 < s; ++ls)
        for (const auto& l : by_size[static_cast<std::size_t>(ls)])
          for (const auto& r : by_size[static_cast<std::size_t>(s - 1 - ls)]) out.push_back(ltl_binary(op, l, r));
  }
  return by_size[static_cast<std::size_t>(size)];
}

LassoSpace::LassoSpace(int atoms, int max_stem, int max_loop)
    : atoms_(atoms), letters_(1 << atoms), max_stem_(max_stem) {
  std::size_t count = 1;
  for (int s = 0; s <= max_stem; ++s) {
    stem_counts_.push_back(count);
    if (count > Bits().size()) throw std::invalid_argument("too many stems for one batch");
    count *= static_cast<std::size_t>(letters_);
  }
  for (int len = 1; len <= max_loop; ++len) {
    std::size_t total = 1;
    for (int i = 0; i < len; ++i) total *= static_cast<std::size_t>(letters_);
    for (std::size_t k = 0; k < total; ++k) {
      std::vector<std::uint64_t> loop;
      std::size_t x = k;
      for (int i = 0; i < len; ++i) {
        loop.push_back(x % static_cast<std::size_t>(letters_));
        x /= static_cast<std::size_t>(letters_);
      }
      loops_.push_back(std::move(loop));
    }
  }
  const auto letters = static_cast<std::size_t>(letters_);
  letter_mask_.resize(static_cast<std::size_t>(max_stem) + 1);
  atom_mask_.resize(static_cast<std::size_t>(max_stem) + 1);
  for (int s = 0; s <= max_stem; ++s) {
    const std::size_t n = stem_counts_[static_cast<std::size_t>(s)];
    Bits all;
    for (std::size_t k = 0; k < n; ++k) all.set(k);
    all_.push_back(all);
    auto& m = letter_mask_[static_cast<std::size_t>(s)];
    auto& a = atom_mask_[static_cast<std::size_t>(s)];
    m.assign(static_cast<std::size_t>(s), std::vector<Bits>(letters));
    a.assign(static_cast<std::size_t>(s), std::vector<Bits>(static_cast<std::size_t>(atoms)));
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t x = k;
      for (std::size_t j = 0; j < static_cast<std::size_t>(s); ++j) {
        const std::size_t c = x % letters;
        m[j][c].set(k);
        for (int at = 0; at < atoms; ++at)
          if ((c >> at) & 1U) a[j][static_cast<std::size_t>(at)].set(k);
        x /= letters;
      }
    }
  }
}

std::size_t LassoSpace::words() const {
  std::size_t stems = 0;
  for (auto c : stem_counts_) stems += c;
  return stems * loops_.size();
}

LassoAgreement LassoSpace::check(const LtlPtr& f, const Buchi* automaton) const {
  std::vector<Node> nodes;
  linearize(f, nodes);
  const Buchi built = automaton ? Buchi{} : build_buchi(f);
  const Buchi& b = automaton ? *automaton : built;
  const std::size_t nq = b.states.size();
  const auto letters = static_cast<std::size_t>(letters_);

  // reach[s][q]: stems of length s along which some run prefix arrives in q
  // at position s. Independent of the loop.
  std::vector<std::vector<Bits>> reach(static_cast<std::size_t>(max_stem_) + 1);
  for (int s = 0; s <= max_stem_; ++s) {
    const Bits& all = all_[static_cast<std::size_t>(s)];
    std::vector<Bits> cur(nq);
    for (int q : b.initial) cur[static_cast<std::size_t>(q)] = all;
    for (int j = 0; j < s; ++j) {
      std::vector<Bits> next(nq);
      for (std::size_t q = 0; q < nq; ++q) {
        if (cur[q].none()) continue;
        Bits match;
        for (std::size_t c = 0; c < letters; ++c)
          if (b.label_matches(static_cast<int>(q), c)) match |= letter_mask_[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)][c];
        const Bits moved = cur[q] & match;
        if (moved.none()) continue;
        for (int t : b.states[q].succ) next[static_cast<std::size_t>(t)] |= moved;
      }
      cur = std::move(next);
    }
    reach[static_cast<std::size_t>(s)] = std::move(cur);
  }

  LassoAgreement res;
  res.words = words();
  const std::size_t nn = nodes.size();
  // Scratch buffers reused across loops.
  std::vector<char> loop_val, valid, on_stack, comp_good, good(nq);
  std::vector<std::size_t> adj_off, adj, stack, popped, comp_start;
  std::vector<int> index, low, comp;
  std::vector<std::pair<std::size_t, std::size_t>> call;
  std::vector<Bits> next(nn), cur(nn);
  for (const auto& loop : loops_) {
    const std::size_t L = loop.size();

    // Semantic truth of every node at every loop position.
    eval_positions(nodes, loop, 0, loop_val);
    auto loop_entry = [&](std::size_t k) { return loop_val[k * L] != 0; };

    // good[q]: an accepting run reads loop^omega starting in q at position 0.
    // Product graph (q, i) with Tarjan SCCs; good nodes reach a non-trivial
    // SCC that contains an accepting state.
    const std::size_t pn = nq * L;
    auto id = [&](std::size_t q, std::size_t i) { return q * L + i; };
    valid.assign(pn, 0);
    for (std::size_t q = 0; q < nq; ++q)
      for (std::size_t i = 0; i < L; ++i) valid[id(q, i)] = b.label_matches(static_cast<int>(q), loop[i]);
    adj_off.assign(pn + 1, 0);
    adj.clear();
    for (std::size_t v = 0; v < pn; ++v) {
      adj_off[v] = adj.size();
      if (!valid[v]) continue;
      const std::size_t ni = (v % L + 1) % L;
      for (int t : b.states[v / L].succ) {
        const std::size_t m = id(static_cast<std::size_t>(t), ni);
        if (valid[m]) adj.push_back(m);
      }
    }
    adj_off[pn] = adj.size();
    index.assign(pn, -1);
    low.assign(pn, 0);
    comp.assign(pn, -1);
    on_stack.assign(pn, 0);
    stack.clear();
    popped.clear();
    comp_start.clear();
    comp_good.clear();
    int counter = 0, ncomp = 0;
    for (std::size_t root = 0; root < pn; ++root) {
      if (!valid[root] || index[root] >= 0) continue;
      call.assign(1, {root, adj_off[root]});
      index[root] = low[root] = counter++;
      stack.push_back(root);
      on_stack[root] = 1;
      while (!call.empty()) {
        const std::size_t v = call.back().first;
        std::size_t& e = call.back().second;
        if (e < adj_off[v + 1]) {
          const std::size_t w = adj[e++];
          if (index[w] < 0) {
            index[w] = low[w] = counter++;
            stack.push_back(w);
            on_stack[w] = 1;
            call.emplace_back(w, adj_off[w]);
          } else if (on_stack[w]) {
            low[v] = std::min(low[v], index[w]);
          }
          continue;
        }
        if (low[v] == index[v]) {
          comp_start.push_back(popped.size());
          bool acc = false, self_loop = false;
          std::size_t w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp[w] = ncomp;
            popped.push_back(w);
            acc = acc || b.states[w / L].accepting;
          } while (w != v);
          for (std::size_t k = adj_off[v]; k < adj_off[v + 1]; ++k) self_loop = self_loop || adj[k] == v;
          const bool nontrivial = popped.size() - comp_start.back() > 1 || self_loop;
          comp_good.push_back(nontrivial && acc);
          ++ncomp;
        }
        call.pop_back();
        if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[v]);
      }
    }
    comp_start.push_back(popped.size());
    // Tarjan emits components in reverse topological order, so successors'
    // components are final before their predecessors'.
    for (int c = 0; c < ncomp; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      if (comp_good[cu]) continue;
      bool g = false;
      for (std::size_t x = comp_start[cu]; x < comp_start[cu + 1] && !g; ++x) {
        const std::size_t v = popped[x];
        for (std::size_t k = adj_off[v]; k < adj_off[v + 1]; ++k)
          g = g || (comp[adj[k]] != c && comp_good[static_cast<std::size_t>(comp[adj[k]])]);
      }
      comp_good[cu] = g;
    }
    for (std::size_t q = 0; q < nq; ++q) good[q] = valid[id(q, 0)] && comp_good[static_cast<std::size_t>(comp[id(q, 0)])];

    for (int s = 0; s <= max_stem_; ++s) {
      const std::size_t n = stem_counts_[static_cast<std::size_t>(s)];
      const auto& masks = atom_mask_[static_cast<std::size_t>(s)];
      const Bits& all = all_[static_cast<std::size_t>(s)];

      // Semantic truth of every node at stem position j, one bit per stem,
      // computed backwards from the loop entry.
      Bits sem;
      if (s == 0) {
        sem = loop_entry(nn - 1) ? all : Bits();
      } else {
        for (std::size_t k = 0; k < nn; ++k) next[k] = loop_entry(k) ? all : Bits();
        for (int j = s - 1; j >= 0; --j) {
          for (std::size_t k = 0; k < nn; ++k) {
            const Node& nd = nodes[k];
            const auto l = static_cast<std::size_t>(nd.lhs), r = static_cast<std::size_t>(nd.rhs);
            Bits v;
            switch (nd.op) {
              case LtlOp::True:
                v = all;
                break;
              case LtlOp::False:
                break;
              case LtlOp::Atom:
                v = masks[static_cast<std::size_t>(j)][static_cast<std::size_t>(nd.atom)];
                break;
              case LtlOp::Not:
                v = all & ~cur[l];
                break;
              case LtlOp::And:
                v = cur[l] & cur[r];
                break;
              case LtlOp::Or:
                v = cur[l] | cur[r];
                break;
              case LtlOp::Implies:
                v = (all & ~cur[l]) | cur[r];
                break;
              case LtlOp::Next:
                v = next[l];
                break;
              case LtlOp::Until:
                v = cur[r] | (cur[l] & next[k]);
                break;
              case LtlOp::Release:
                v = cur[r] & (cur[l] | next[k]);
                break;
              case LtlOp::Eventually:
                v = cur[l] | next[k];
                break;
              case LtlOp::Always:
                v = cur[l] & next[k];
                break;
            }
            cur[k] = v;
          }
          std::swap(cur, next);
        }
        sem = next.back();
      }

      Bits acc;
      for (std::size_t q = 0; q < nq; ++q)
        if (good[q]) acc |= reach[static_cast<std::size_t>(s)][q];

      const Bits diff = sem ^ acc;
      if (diff.none()) continue;
      res.mismatches += diff.count();
      for (std::size_t k = 0; k < n && res.examples.size() < 3; ++k) {
        if (!diff.test(k)) continue;
        LassoMismatch mm;
        std::size_t x = k;
        for (int j = 0; j < s; ++j) {
          mm.stem.push_back(x % letters);
          x /= letters;
        }
        mm.loop = loop;
        mm.semantic = sem.test(k);
        mm.automaton = acc.test(k);
        res.examples.push_back(std::move(mm));
      }
    }
  }
  return res;
}

}  // namespace tocheck::testing
