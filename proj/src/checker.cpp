#include "tocheck/checker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <queue>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tocheck/dsl.hpp"

namespace tocheck {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// StateStore

StateStore::StateStore(std::size_t width) : width_(width == 0 ? 1 : width), slots_(1024, 0) {}

std::uint64_t StateStore::hash(const std::int32_t* packed) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ width_;
  for (std::size_t i = 0; i < width_; ++i) {
    h ^= static_cast<std::uint32_t>(packed[i]);
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 32;
  }
  h ^= h >> 29;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 32;
  return h;
}

void StateStore::grow() {
  std::vector<std::uint32_t> fresh(slots_.size() * 2, 0);
  const std::size_t mask = fresh.size() - 1;
  for (std::uint32_t idx = 0; idx < count_; ++idx) {
    std::size_t pos = hash(at(idx)) & mask;
    while (fresh[pos] != 0) pos = (pos + 1) & mask;
    fresh[pos] = idx + 1;
  }
  slots_.swap(fresh);
}

std::optional<std::uint32_t> StateStore::find(const std::int32_t* packed) const {
  const std::size_t mask = slots_.size() - 1;
  std::size_t pos = hash(packed) & mask;
  const std::size_t bytes = width_ * sizeof(std::int32_t);
  while (slots_[pos] != 0) {
    std::uint32_t idx = slots_[pos] - 1;
    if (std::memcmp(at(idx), packed, bytes) == 0) return idx;
    pos = (pos + 1) & mask;
  }
  return std::nullopt;
}

std::pair<std::uint32_t, bool> StateStore::insert(const std::int32_t* packed) {
  if ((count_ + 1) * 2 > slots_.size()) grow();
  const std::size_t mask = slots_.size() - 1;
  std::size_t pos = hash(packed) & mask;
  const std::size_t bytes = width_ * sizeof(std::int32_t);
  while (slots_[pos] != 0) {
    std::uint32_t idx = slots_[pos] - 1;
    if (std::memcmp(at(idx), packed, bytes) == 0) return {idx, false};
    pos = (pos + 1) & mask;
  }
  if (count_ >= std::numeric_limits<std::uint32_t>::max() - 1) throw std::length_error("state store full");
  const auto idx = static_cast<std::uint32_t>(count_++);
  arena_.insert(arena_.end(), packed, packed + width_);
  slots_[pos] = idx + 1;
  return {idx, true};
}

// ---------------------------------------------------------------------------
// Level-synchronous breadth-first exploration. Successors of a level are
// computed by the workers into per-state slots and merged in index order, so
// the result never depends on the worker count.

namespace {

constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();
constexpr std::size_t kBatch = 1 << 14;

struct Exploration {
  enum class Status { Complete, Stopped, Capped, Error };
  explicit Exploration(std::size_t width) : store(width) {}
  StateStore store;
  std::vector<std::uint32_t> parent;
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> targets;
  std::vector<std::uint32_t> initial;
  Stats stats;
  Status status = Status::Complete;
  std::string message;
  std::uint32_t stop_index = 0;
};

struct Expansion {
  std::vector<ClocklessState> succ;
  std::string error;
  bool failed = false;
};

void expand_batch(const FlatModel& fm, const StateStore& store, std::uint32_t begin, std::uint32_t end,
                  unsigned workers, std::vector<Expansion>& out) {
  out.assign(end - begin, Expansion{});
  auto work = [&](unsigned w, unsigned stride) {
    for (std::uint32_t i = begin + w; i < end; i += stride) {
      Expansion& x = out[i - begin];
      try {
        x.succ.clear();
        for (auto& s : successors(fm, unpack_state(fm, store.at(i)))) x.succ.push_back(std::move(s.state));
      } catch (const ModelError& e) {
        x.failed = true;
        x.error = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(workers, end - begin));
  if (n == 1) {
    work(0, 1);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n; ++w) pool.emplace_back(work, w, n);
  for (auto& t : pool) t.join();
}

template <class OnNew>
Exploration explore(const FlatModel& fm, const CheckOptions& opts, bool record_edges, OnNew on_new) {
  const auto t0 = std::chrono::steady_clock::now();
  Exploration ex(packed_width(fm));
  std::vector<std::int32_t> buf(ex.store.width());
  auto finish = [&](Exploration::Status st) {
    ex.status = st;
    ex.stats.states_stored = ex.store.size();
    ex.stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (record_edges && st == Exploration::Status::Complete) ex.offsets.push_back(static_cast<std::uint32_t>(ex.targets.size()));
    return std::move(ex);
  };
  // Returns true when exploration must stop.
  auto add = [&](const ClocklessState& s, std::uint32_t parent, std::uint32_t* idx_out) {
    pack_state(fm, s, buf.data());
    auto [idx, fresh] = ex.store.insert(buf.data());
    *idx_out = idx;
    if (!fresh) return false;
    ex.parent.push_back(parent);
    if (ex.store.size() > opts.state_cap) {
      ex.message = fmt::format("state cap of {} reached", opts.state_cap);
      ex.status = Exploration::Status::Capped;
      return true;
    }
    if (on_new(idx, s)) {
      ex.stop_index = idx;
      ex.status = Exploration::Status::Stopped;
      return true;
    }
    return false;
  };

  std::vector<ClocklessState> inits;
  try {
    inits = initial_states(fm);
  } catch (const ModelError& e) {
    ex.message = e.what();
    return finish(Exploration::Status::Error);
  }
  for (const auto& s : inits) {
    std::uint32_t idx = 0;
    if (add(s, kNoParent, &idx)) return finish(ex.status);
    if (std::find(ex.initial.begin(), ex.initial.end(), idx) == ex.initial.end()) ex.initial.push_back(idx);
  }

  std::uint32_t level_begin = 0;
  std::vector<Expansion> batch;
  while (level_begin < ex.store.size()) {
    const auto level_end = static_cast<std::uint32_t>(ex.store.size());
    ex.stats.peak_frontier = std::max<std::size_t>(ex.stats.peak_frontier, level_end - level_begin);
    for (std::uint32_t b = level_begin; b < level_end; b += static_cast<std::uint32_t>(kBatch)) {
      const std::uint32_t e = std::min<std::uint32_t>(level_end, b + static_cast<std::uint32_t>(kBatch));
      expand_batch(fm, ex.store, b, e, opts.workers, batch);
      for (std::uint32_t i = b; i < e; ++i) {
        Expansion& x = batch[i - b];
        if (x.failed) {
          ex.message = x.error;
          ex.stop_index = i;
          return finish(Exploration::Status::Error);
        }
        if (record_edges) ex.offsets.push_back(static_cast<std::uint32_t>(ex.targets.size()));
        if (x.succ.empty()) ++ex.stats.deadlocks;
        for (const auto& s : x.succ) {
          ++ex.stats.transitions;
          std::uint32_t idx = 0;
          bool stop = add(s, i, &idx);
          if (record_edges) ex.targets.push_back(idx);
          if (stop) return finish(ex.status);
        }
      }
    }
    level_begin = level_end;
  }
  return finish(Exploration::Status::Complete);
}

auto no_stop = [](std::uint32_t, const ClocklessState&) { return false; };

TransitionLabel find_label(const FlatModel& fm, const ClocklessState& a, const ClocklessState& b) {
  auto succ = successors(fm, a);
  if (succ.empty() && a == b) {
    TransitionLabel l;
    l.kind = TransitionLabel::Kind::Stutter;
    return l;
  }
  for (const auto& s : succ)
    if (s.state == b) return s.label;
  throw std::logic_error("counterexample step has no matching transition");
}

std::vector<TransitionLabel> labels_for(const FlatModel& fm, const std::vector<ClocklessState>& states) {
  std::vector<TransitionLabel> out;
  for (std::size_t i = 0; i + 1 < states.size(); ++i) out.push_back(find_label(fm, states[i], states[i + 1]));
  return out;
}

Counterexample path_to(const FlatModel& fm, const Exploration& ex, std::uint32_t idx) {
  std::vector<std::uint32_t> chain;
  for (std::uint32_t i = idx; i != kNoParent; i = ex.parent[i]) chain.push_back(i);
  std::reverse(chain.begin(), chain.end());
  Counterexample c;
  c.kind = Counterexample::Kind::Path;
  for (auto i : chain) c.states.push_back(unpack_state(fm, ex.store.at(i)));
  c.labels = labels_for(fm, c.states);
  return c;
}

Verdict from_exploration(const Exploration& ex, Verdict v) {
  v.stats = ex.stats;
  if (ex.status == Exploration::Status::Capped) {
    v.outcome = Outcome::Inconclusive;
    v.message = ex.message;
  } else if (ex.status == Exploration::Status::Error) {
    v.outcome = Outcome::Error;
    v.message = ex.message;
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Invariants

Verdict check_invariant(const FlatModel& fm, const ExprPtr& predicate, const CheckOptions& opts) {
  Verdict v;
  v.kind = "invariant";
  auto violates = [&](std::uint32_t, const ClocklessState& s) {
    return predicate && eval(*predicate, ClocklessView{s}) == 0;
  };
  Exploration ex = explore(fm, opts, false, violates);
  v = from_exploration(ex, v);
  if (ex.status == Exploration::Status::Stopped) {
    v.outcome = Outcome::Violated;
    v.counterexample = path_to(fm, ex, ex.stop_index);
  }
  return v;
}

FlatModel instrument_timeliness(const FlatModel& fm, const std::string& flag1, const std::string& flag2,
                                std::int64_t bound) {
  auto var_of = [&](const std::string& text) {
    auto parsed = parse_expression(text);
    if (!parsed.expr) throw std::invalid_argument("malformed timeliness flag '" + text + "'");
    ExprPtr e = resolve_property_expr(fm, parsed.expr);
    if (e->slot.kind != SlotKind::Var) throw std::invalid_argument("timeliness flag '" + text + "' is not a variable");
    return e->slot.index;
  };
  FlatModel out = fm;
  std::string name = "time_diff";
  for (int k = 1; out.find_var(name) >= 0; ++k) name = "time_diff_" + std::to_string(k);
  FlatVar acc;
  acc.name = name;
  acc.lo = 0;
  acc.hi = bound + fm.max_timeout;
  acc.init = {0};
  out.vars.push_back(acc);
  out.accumulator = Accumulator{static_cast<int>(out.vars.size()) - 1, var_of(flag1), var_of(flag2)};
  return out;
}

Verdict check_timeliness(const FlatModel& fm, const std::string& flag1, const std::string& flag2, std::int64_t bound,
                         const CheckOptions& opts) {
  FlatModel inst = instrument_timeliness(fm, flag1, flag2, bound);
  const int acc = inst.accumulator->var;
  ExprPtr pred = make_binary(Op::Le, make_resolved(Slot{SlotKind::Var, acc, -1}, inst.vars.back().name),
                             make_const(bound));
  Verdict v = check_invariant(inst, pred, opts);
  v.kind = "timeliness";
  return v;
}

// ---------------------------------------------------------------------------
// LTL

namespace {

struct Product {
  const StateGraph& g;
  const Buchi& b;
  const std::vector<std::uint64_t>& val;
  std::uint64_t nq;

  std::uint64_t id(std::uint32_t s, int q) const { return std::uint64_t{s} * nq + static_cast<std::uint64_t>(q); }
  std::uint32_t sys(std::uint64_t node) const { return static_cast<std::uint32_t>(node / nq); }
  int aut(std::uint64_t node) const { return static_cast<int>(node % nq); }
  bool accepting(std::uint64_t node) const { return b.states[static_cast<std::size_t>(aut(node))].accepting; }

  void successors(std::uint64_t node, std::vector<std::uint64_t>& out) const {
    out.clear();
    const std::uint32_t s = sys(node);
    const auto& qs = b.states[static_cast<std::size_t>(aut(node))].succ;
    auto emit = [&](std::uint32_t t) {
      for (int q : qs)
        if (b.label_matches(q, val[t])) out.push_back(id(t, q));
    };
    const std::uint32_t lo = g.offsets[s], hi = g.offsets[s + 1];
    if (lo == hi) emit(s);  // deadlocks stutter forever
    for (std::uint32_t k = lo; k < hi; ++k) emit(g.targets[k]);
  }

  std::vector<std::uint64_t> initial() const {
    std::vector<std::uint64_t> out;
    for (auto s : g.initial)
      for (int q : b.initial)
        if (b.label_matches(q, val[s])) out.push_back(id(s, q));
    return out;
  }
};

Counterexample lasso_from(const FlatModel& fm, const StateGraph& g, const Product& pr,
                          const std::vector<std::uint64_t>& nodes, std::size_t loop_start) {
  Counterexample c;
  c.kind = Counterexample::Kind::Lasso;
  c.loop_start = loop_start;
  for (auto n : nodes) c.states.push_back(g.states[pr.sys(n)]);
  c.labels = labels_for(fm, c.states);
  c.labels.push_back(find_label(fm, c.states.back(), c.states[loop_start]));
  return c;
}

// Nested depth-first search for an accepting cycle; returns the lasso nodes and
// loop start.
std::optional<std::pair<std::vector<std::uint64_t>, std::size_t>> nested_dfs(const Product& pr) {
  std::unordered_map<std::uint64_t, std::uint8_t> mark;  // bit 0: blue, bit 1: red, bit 2: on blue stack
  struct Frame {
    std::uint64_t node;
    std::vector<std::uint64_t> succ;
    std::size_t next = 0;
  };
  std::vector<Frame> blue;
  std::vector<std::uint64_t> scratch;

  auto red_search = [&](std::uint64_t seed) -> std::optional<std::vector<std::uint64_t>> {
    std::vector<Frame> red;
    pr.successors(seed, scratch);
    red.push_back(Frame{seed, scratch, 0});
    while (!red.empty()) {
      Frame& f = red.back();
      if (f.next == f.succ.size()) {
        red.pop_back();
        continue;
      }
      std::uint64_t n = f.succ[f.next++];
      std::uint8_t& m = mark[n];
      if (m & 4) {
        std::vector<std::uint64_t> path;
        for (const auto& fr : red) path.push_back(fr.node);
        path.push_back(n);
        return path;
      }
      if (m & 2) continue;
      m |= 2;
      pr.successors(n, scratch);
      red.push_back(Frame{n, scratch, 0});
    }
    return std::nullopt;
  };

  for (auto init : pr.initial()) {
    if (mark[init] & 1) continue;
    mark[init] |= 5;
    pr.successors(init, scratch);
    blue.push_back(Frame{init, scratch, 0});
    while (!blue.empty()) {
      Frame& f = blue.back();
      if (f.next < f.succ.size()) {
        std::uint64_t n = f.succ[f.next++];
        std::uint8_t& m = mark[n];
        if (m & 1) continue;
        m |= 5;
        pr.successors(n, scratch);
        blue.push_back(Frame{n, scratch, 0});
        continue;
      }
      const std::uint64_t node = f.node;
      if (pr.accepting(node)) {
        if (auto red_path = red_search(node)) {
          // red_path runs from `node` (top of the blue stack) to a blue-stack node.
          std::vector<std::uint64_t> nodes;
          for (const auto& fr : blue) nodes.push_back(fr.node);
          const std::uint64_t target = red_path->back();
          std::size_t loop_start = 0;
          for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i] == target) loop_start = i;
          for (std::size_t i = 1; i + 1 < red_path->size(); ++i) nodes.push_back((*red_path)[i]);
          return std::make_pair(std::move(nodes), loop_start);
        }
      }
      mark[node] &= static_cast<std::uint8_t>(~4);
      blue.pop_back();
    }
  }
  return std::nullopt;
}

std::uint64_t involved(const TransitionLabel& l) {
  std::uint64_t m = 0;
  if (l.kind == TransitionLabel::Kind::TimeProgress || l.kind == TransitionLabel::Kind::Stutter) return 0;
  if (l.process >= 0 && l.process < 64) m |= std::uint64_t{1} << l.process;
  if (l.partner >= 0 && l.partner < 64) m |= std::uint64_t{1} << l.partner;
  return m;
}

// Accepting cycle under weak fairness: an accepting, non-trivial SCC of the
// product in which every process either acts or is disabled somewhere.
std::optional<std::pair<std::vector<std::uint64_t>, std::size_t>> fair_cycle(const FlatModel& fm,
                                                                            const StateGraph& g,
                                                                            const Product& pr) {
  if (fm.processes.size() > 64) throw std::invalid_argument("--fair supports at most 64 processes");
  // Explicit reachable product.
  std::unordered_map<std::uint64_t, std::uint32_t> index;
  std::vector<std::uint64_t> nodes;
  std::vector<std::uint32_t> parent;
  std::vector<std::vector<std::uint32_t>> adj;
  std::vector<std::uint64_t> scratch;
  auto intern = [&](std::uint64_t n, std::uint32_t par) {
    auto [it, fresh] = index.emplace(n, static_cast<std::uint32_t>(nodes.size()));
    if (fresh) {
      nodes.push_back(n);
      parent.push_back(par);
      adj.emplace_back();
    }
    return it->second;
  };
  for (auto n : pr.initial()) intern(n, kNoParent);
  for (std::uint32_t i = 0; i < nodes.size(); ++i) {
    pr.successors(nodes[i], scratch);
    for (auto m : scratch) {
      std::uint32_t j = intern(m, i);
      adj[i].push_back(j);
    }
  }
  const std::size_t n = nodes.size();

  // Iterative Tarjan.
  std::vector<std::int64_t> low(n, -1), num(n, -1);
  std::vector<int> comp(n, -1);
  std::vector<std::uint32_t> stack;
  std::vector<char> on_stack(n, 0);
  std::int64_t counter = 0;
  int ncomp = 0;
  for (std::uint32_t root = 0; root < n; ++root) {
    if (num[root] >= 0) continue;
    std::vector<std::pair<std::uint32_t, std::size_t>> call{{root, 0}};
    num[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, k] = call.back();
      if (k < adj[v].size()) {
        std::uint32_t w = adj[v][k++];
        if (num[w] < 0) {
          num[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], num[w]);
        }
        continue;
      }
      const std::uint32_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] == num[done]) {
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = ncomp;
        } while (w != done);
        ++ncomp;
      }
    }
  }

  std::vector<std::vector<std::uint32_t>> members(static_cast<std::size_t>(ncomp));
  for (std::uint32_t i = 0; i < n; ++i) members[static_cast<std::size_t>(comp[i])].push_back(i);
  const std::size_t np = fm.processes.size();
  const std::uint64_t all = np == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << np) - 1;

  // Per system state: mask of enabled processes and per-target actor masks.
  std::unordered_map<std::uint32_t, std::pair<std::uint64_t, std::unordered_map<std::uint32_t, std::uint64_t>>> info;
  auto sys_info = [&](std::uint32_t s) -> const auto& {
    auto it = info.find(s);
    if (it != info.end()) return it->second;
    std::pair<std::uint64_t, std::unordered_map<std::uint32_t, std::uint64_t>> entry{0, {}};
    auto succ = successors(fm, g.states[s]);
    for (std::size_t k = 0; k < succ.size(); ++k) {
      std::uint64_t m = involved(succ[k].label);
      entry.first |= m;
      entry.second[g.targets[g.offsets[s] + k]] |= m;
    }
    return info.emplace(s, std::move(entry)).first->second;
  };

  for (int c = 0; c < ncomp; ++c) {
    const auto& mem = members[static_cast<std::size_t>(c)];
    bool nontrivial = mem.size() > 1;
    bool accepting = false;
    for (auto v : mem) {
      accepting = accepting || pr.accepting(nodes[v]);
      for (auto w : adj[v]) nontrivial = nontrivial || w == v;
    }
    if (!nontrivial || !accepting) continue;

    std::uint64_t fired = 0, disabled = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> fire_edge(np, {kNoParent, kNoParent});
    std::vector<std::uint32_t> disabled_at(np, kNoParent);
    for (auto v : mem) {
      const auto& [enabled, by_target] = sys_info(pr.sys(nodes[v]));
      for (std::size_t p = 0; p < np; ++p)
        if (!(enabled >> p & 1) && disabled_at[p] == kNoParent) disabled_at[p] = v;
      disabled |= all & ~enabled;
      for (auto w : adj[v]) {
        if (comp[w] != c) continue;
        auto it = by_target.find(pr.sys(nodes[w]));
        std::uint64_t m = it == by_target.end() ? 0 : it->second;
        for (std::size_t p = 0; p < np; ++p)
          if ((m >> p & 1) && fire_edge[p].first == kNoParent) fire_edge[p] = {v, w};
        fired |= m;
      }
    }
    if (((fired | disabled) & all) != all) continue;

    // Lasso: stem to the first-discovered member, then a tour through an
    // accepting node and one witness per process.
    const std::uint32_t entry = *std::min_element(mem.begin(), mem.end());
    std::vector<std::uint32_t> stem;
    for (std::uint32_t v = entry; v != kNoParent; v = parent[v]) stem.push_back(v);
    std::reverse(stem.begin(), stem.end());

    auto bfs_within = [&](std::uint32_t from, std::uint32_t to) {
      std::unordered_map<std::uint32_t, std::uint32_t> prev{{from, from}};
      std::queue<std::uint32_t> q;
      q.push(from);
      while (!q.empty() && !prev.count(to)) {
        auto v = q.front();
        q.pop();
        for (auto w : adj[v])
          if (comp[w] == c && !prev.count(w)) {
            prev[w] = v;
            q.push(w);
          }
      }
      std::vector<std::uint32_t> path;
      for (std::uint32_t v = to; v != from; v = prev.at(v)) path.push_back(v);
      std::reverse(path.begin(), path.end());
      return path;  // excludes `from`
    };

    std::vector<std::uint32_t> loop{entry};
    auto go = [&](std::uint32_t to) {
      for (auto v : bfs_within(loop.back(), to)) loop.push_back(v);
    };
    for (auto v : mem)
      if (pr.accepting(nodes[v])) {
        go(v);
        break;
      }
    for (std::size_t p = 0; p < np; ++p) {
      if (fire_edge[p].first != kNoParent) {
        go(fire_edge[p].first);
        loop.push_back(fire_edge[p].second);
      } else {
        go(disabled_at[p]);
      }
    }
    if (loop.size() == 1) {
      for (auto w : adj[entry])
        if (comp[w] == c) {
          loop.push_back(w);
          break;
        }
    }
    go(entry);
    loop.pop_back();  // closes back onto the entry

    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i + 1 < stem.size(); ++i) out.push_back(nodes[stem[i]]);
    const std::size_t loop_start = out.size();
    for (auto v : loop) out.push_back(nodes[v]);
    return std::make_pair(std::move(out), loop_start);
  }
  return std::nullopt;
}

}  // namespace

StateGraph explore_graph(const FlatModel& fm, const CheckOptions& opts) {
  Exploration ex = explore(fm, opts, true, no_stop);
  if (ex.status == Exploration::Status::Error) throw ModelError(ex.message);
  StateGraph g;
  g.complete = ex.status == Exploration::Status::Complete;
  g.initial = ex.initial;
  g.offsets = std::move(ex.offsets);
  g.targets = std::move(ex.targets);
  for (std::uint32_t i = 0; i < ex.store.size(); ++i) g.states.push_back(unpack_state(fm, ex.store.at(i)));
  return g;
}

Verdict check_ltl(const FlatModel& fm, const LtlFormula& formula, const CheckOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  v.kind = "ltl";
  Exploration ex = explore(fm, opts, true, no_stop);
  v = from_exploration(ex, v);
  if (ex.status != Exploration::Status::Complete) return v;

  StateGraph g;
  g.initial = ex.initial;
  g.offsets = std::move(ex.offsets);
  g.targets = std::move(ex.targets);
  std::vector<std::uint64_t> val(ex.store.size(), 0);
  for (std::uint32_t i = 0; i < ex.store.size(); ++i) {
    g.states.push_back(unpack_state(fm, ex.store.at(i)));
    for (std::size_t a = 0; a < formula.atoms.size(); ++a)
      if (eval(*formula.atoms[a], ClocklessView{g.states.back()}) != 0) val[i] |= std::uint64_t{1} << a;
  }
  const Buchi b = build_buchi(negate(formula.root));
  Product pr{g, b, val, std::max<std::uint64_t>(1, b.states.size())};
  auto found = opts.fair ? fair_cycle(fm, g, pr) : nested_dfs(pr);
  if (found) {
    v.outcome = Outcome::Violated;
    v.counterexample = lasso_from(fm, g, pr, found->first, found->second);
  }
  v.stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return v;
}

Verdict check_property(const FlatModel& fm, const FlatProperty& prop, const CheckOptions& opts) {
  auto fail_parse = [&](const std::vector<ParseError>& errs) {
    std::vector<Diagnostic> diags;
    for (const auto& e : errs) diags.push_back(Diagnostic{prop.span, Severity::Error, e.message});
    throw FlattenError(std::move(diags));
  };
  Verdict v;
  switch (prop.kind) {
    case PropertyKind::Invariant: {
      auto parsed = parse_expression(prop.formula);
      if (!parsed.errors.empty() || !parsed.expr) fail_parse(parsed.errors);
      v = check_invariant(fm, resolve_property_expr(fm, parsed.expr), opts);
      break;
    }
    case PropertyKind::Ltl: {
      auto parsed = parse_ltl(prop.formula);
      if (!parsed.formula) fail_parse(parsed.errors);
      resolve_ltl(fm, *parsed.formula);
      v = check_ltl(fm, *parsed.formula, opts);
      break;
    }
    case PropertyKind::Timeliness:
      v = check_timeliness(fm, prop.flag1, prop.flag2, prop.bound, opts);
      break;
  }
  v.property = prop.name;
  return v;
}

// ---------------------------------------------------------------------------
// Statistics

double state_bound(const FlatModel& fm) {
  const double n = static_cast<double>(fm.processes.size());
  const double k = static_cast<double>(fm.timing.size());
  double d = 1;
  for (const auto& p : fm.processes) d = std::max(d, static_cast<double>(p.locations.size()));
  double bound = std::pow(static_cast<double>(fm.max_timeout + 1), n + k) * std::pow(d, n);
  for (const auto& v : fm.vars) bound *= static_cast<double>(v.hi - v.lo + 1);
  if (!fm.messages.empty()) {
    // Multisets of at most `capacity` entries drawn from E kinds.
    const double kinds = static_cast<double>(fm.messages.size()) * n * n * static_cast<double>(fm.max_timeout + 1);
    double term = 1, sum = 1;
    for (int j = 1; j <= fm.calendar_capacity; ++j) {
      term *= (kinds + j - 1) / j;
      sum += term;
    }
    bound *= sum;
  }
  return bound;
}

ExploreStats explore_stats(const FlatModel& fm, const CheckOptions& opts) {
  Exploration ex = explore(fm, opts, false, no_stop);
  ExploreStats out;
  out.stats = ex.stats;
  out.bound = state_bound(fm);
  out.complete = ex.status == Exploration::Status::Complete;
  out.message = ex.message;
  if (ex.status == Exploration::Status::Error) throw ModelError(ex.message);
  return out;
}

// ---------------------------------------------------------------------------
// Replay

bool replay(const FlatModel& fm, const Counterexample& cex, std::string* why) {
  auto fail = [&](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  if (cex.states.empty()) return fail("empty counterexample");
  const std::size_t steps = cex.states.size() - (cex.kind == Counterexample::Kind::Path ? 1 : 0);
  if (cex.labels.size() != steps) return fail("label count does not match state count");
  auto inits = initial_states(fm);
  if (std::find(inits.begin(), inits.end(), cex.states[0]) == inits.end()) return fail("first state is not initial");
  for (std::size_t i = 0; i < steps; ++i) {
    const auto& from = cex.states[i];
    const std::size_t next = i + 1 < cex.states.size() ? i + 1 : cex.loop_start;
    const auto& to = cex.states[next];
    const auto& label = cex.labels[i];
    auto succ = successors(fm, from);
    bool ok = false;
    if (label.kind == TransitionLabel::Kind::Stutter) {
      ok = succ.empty() && from == to;
    } else {
      for (const auto& s : succ) ok = ok || (s.label == label && s.state == to);
    }
    if (!ok) return fail(fmt::format("step {} ({}) does not reproduce the recorded state", i, format_label(fm, label)));
  }
  return true;
}

// ---------------------------------------------------------------------------
// Clocked/clockless correspondence

namespace {

bool zero_delay_somewhere(const FlatModel& fm, const ClocklessState& s) {
  for (std::size_t p = 0; p < fm.processes.size(); ++p)
    if (fm.processes[p].locations[static_cast<std::size_t>(s.locs[p])].zero_delay) return true;
  return false;
}

std::int64_t elapse(const FlatModel& fm, const ClocklessState& s) {
  if (zero_delay_somewhere(fm, s)) return 0;
  std::int64_t m = std::numeric_limits<std::int64_t>::max();
  for (auto t : s.timeouts) m = std::min(m, t);
  for (const auto& c : s.calendar) m = std::min(m, c.remaining);
  return m == std::numeric_limits<std::int64_t>::max() ? 0 : m;
}

// Packs an integral clocked state as [t, clockless-shaped absolute values].
void pack_clocked(const FlatModel& fm, const ClockedState& s, std::vector<std::int32_t>& buf) {
  ClocklessState abs;
  abs.locs = s.locs;
  for (const auto& x : s.timeouts) abs.timeouts.push_back(floor_of(x));
  for (const auto& x : s.timing) abs.timing.push_back(floor_of(x));
  abs.vars = s.vars;
  for (const auto& c : s.calendar) abs.calendar.push_back(CalendarEntry{c.message, c.sender, c.receiver, floor_of(c.due)});
  buf[0] = static_cast<std::int32_t>(floor_of(s.t));
  pack_state(fm, abs, buf.data() + 1);
}

}  // namespace

std::int64_t default_horizon(const FlatModel& fm, const CheckOptions& opts) {
  StateGraph g = explore_graph(fm, opts);
  const std::size_t n = g.states.size();
  std::vector<std::int64_t> dist(n, std::numeric_limits<std::int64_t>::max());
  using Item = std::pair<std::int64_t, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (auto s : g.initial) {
    dist[s] = 0;
    pq.emplace(0, s);
  }
  while (!pq.empty()) {
    auto [d, s] = pq.top();
    pq.pop();
    if (d != dist[s]) continue;
    const std::int64_t w = elapse(fm, g.states[s]);
    for (std::uint32_t k = g.offsets[s]; k < g.offsets[s + 1]; ++k) {
      const std::uint32_t t = g.targets[k];
      if (d + w < dist[t]) {
        dist[t] = d + w;
        pq.emplace(d + w, t);
      }
    }
  }
  std::int64_t far = 0;
  for (auto d : dist)
    if (d != std::numeric_limits<std::int64_t>::max()) far = std::max(far, d);
  return far + fm.max_timeout;
}

BisimReport bisim_check(const FlatModel& fm, std::int64_t horizon, const CheckOptions& opts,
                        const NormalizeFn& normalize) {
  BisimReport r;
  r.horizon = horizon;
  auto mismatch = [&](std::string msg) {
    r.status = BisimReport::Status::Mismatch;
    r.message = std::move(msg);
    return r;
  };
  if (!fm.timing.empty()) throw std::invalid_argument("bisimulation check requires a model without timing variables");

  StateGraph g;
  try {
    g = explore_graph(fm, opts);
  } catch (const ModelError& e) {
    return mismatch(std::string("clockless model error: ") + e.what());
  }
  r.clockless_states = g.states.size();
  if (!g.complete) {
    r.status = BisimReport::Status::Inconclusive;
    r.message = "clockless exploration hit the state cap";
    return r;
  }
  StateStore cl(packed_width(fm));
  std::vector<std::int32_t> cbuf(packed_width(fm));
  for (const auto& s : g.states) {
    pack_state(fm, s, cbuf.data());
    cl.insert(cbuf.data());
  }
  auto lookup = [&](const ClocklessState& s) -> std::optional<std::uint32_t> {
    if (s.locs.size() != fm.processes.size() || s.timeouts.size() != fm.processes.size() ||
        s.vars.size() != fm.vars.size() || s.calendar.size() > static_cast<std::size_t>(fm.calendar_capacity))
      return std::nullopt;
    pack_state(fm, s, cbuf.data());
    return cl.find(cbuf.data());
  };
  auto image = [&](const ClockedState& s) -> std::optional<ClocklessState> {
    try {
      return normalize(s);
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    }
  };
  auto describe = [&](const ClockedState& s) { return clocked_state_to_json(fm, s).dump(); };

  // Initial states correspond one-to-one.
  std::vector<std::uint32_t> init_image;
  auto cinits = initial_states_clocked(fm);
  for (const auto& s : cinits) {
    auto img = image(s);
    auto idx = img ? lookup(*img) : std::nullopt;
    if (!idx) return mismatch("initial clocked state has no clockless image: " + describe(s));
    init_image.push_back(*idx);
  }
  std::sort(init_image.begin(), init_image.end());
  init_image.erase(std::unique(init_image.begin(), init_image.end()), init_image.end());
  std::vector<std::uint32_t> cinit = g.initial;
  std::sort(cinit.begin(), cinit.end());
  if (init_image != cinit) return mismatch("initial state sets differ");

  StateStore seen(packed_width(fm) + 1);
  std::vector<std::int32_t> buf(seen.width());
  std::vector<ClockedState> queue;
  for (const auto& s : cinits) {
    pack_clocked(fm, s, buf);
    if (seen.insert(buf.data()).second) queue.push_back(s);
  }
  std::vector<char> covered(g.states.size(), 0);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const ClockedState s = queue[head];
    auto img = image(s);
    auto idx = img ? lookup(*img) : std::nullopt;
    if (!idx) return mismatch("clocked state has no clockless image: " + describe(s));
    if (img->locs != s.locs || img->vars != s.vars) return mismatch("atom valuation differs at " + describe(s));
    std::vector<ClockedSuccessor> succ;
    try {
      succ = successors_clocked(fm, s);
    } catch (const ModelError& e) {
      return mismatch(std::string("clocked model error: ") + e.what());
    }
    bool interior = true;
    for (const auto& sc : succ) interior = interior && sc.state.t <= horizon;
    if (interior) {
      std::vector<std::uint32_t> forward;
      for (const auto& sc : succ) {
        auto simg = image(sc.state);
        auto sidx = simg ? lookup(*simg) : std::nullopt;
        if (!sidx) return mismatch("clocked successor has no clockless image: " + describe(sc.state));
        forward.push_back(*sidx);
      }
      std::vector<std::uint32_t> backward(g.targets.begin() + g.offsets[*idx], g.targets.begin() + g.offsets[*idx + 1]);
      std::sort(forward.begin(), forward.end());
      forward.erase(std::unique(forward.begin(), forward.end()), forward.end());
      std::sort(backward.begin(), backward.end());
      backward.erase(std::unique(backward.begin(), backward.end()), backward.end());
      if (forward != backward) return mismatch("successor images differ at " + describe(s));
      covered[*idx] = 1;
    }
    for (const auto& sc : succ) {
      if (sc.state.t > horizon) continue;
      pack_clocked(fm, sc.state, buf);
      if (seen.insert(buf.data()).second) {
        if (seen.size() > opts.state_cap) {
          r.status = BisimReport::Status::Inconclusive;
          r.message = fmt::format("clocked exploration exceeded the state cap of {}", opts.state_cap);
          r.clocked_states = seen.size();
          return r;
        }
        queue.push_back(sc.state);
      }
    }
  }
  r.clocked_states = seen.size();
  for (std::size_t i = 0; i < covered.size(); ++i)
    if (!covered[i]) {
      r.status = BisimReport::Status::Inconclusive;
      r.message = fmt::format("horizon {} too small: clockless state {} has no fully explored clocked counterpart",
                              horizon, state_to_json(fm, g.states[i]).dump());
      return r;
    }
  return r;
}

// ---------------------------------------------------------------------------
// JSON

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Holds:
      return "holds";
    case Outcome::Violated:
      return "violated";
    case Outcome::Inconclusive:
      return "inconclusive";
    case Outcome::Error:
      return "error";
  }
  return "?";
}

json counterexample_to_json(const FlatModel& fm, const Counterexample& c) {
  json j;
  j["kind"] = c.kind == Counterexample::Kind::Path ? "path" : "lasso";
  json states = json::array(), labels = json::array();
  for (const auto& s : c.states) states.push_back(state_to_json(fm, s));
  for (const auto& l : c.labels) labels.push_back(label_to_json(fm, l));
  j["states"] = std::move(states);
  j["labels"] = std::move(labels);
  if (c.kind == Counterexample::Kind::Lasso) j["loop_start"] = c.loop_start;
  return j;
}

json verdict_to_json(const FlatModel& fm, const Verdict& v) {
  json j;
  j["schema"] = 1;
  j["property"] = v.property;
  j["kind"] = v.kind;
  if (v.outcome == Outcome::Holds || v.outcome == Outcome::Violated)
    j["holds"] = v.outcome == Outcome::Holds;
  else
    j["holds"] = nullptr;
  j["result"] = outcome_name(v.outcome);
  j["counterexample"] = v.counterexample ? counterexample_to_json(fm, *v.counterexample) : json(nullptr);
  j["stats"] = json{{"states_stored", v.stats.states_stored},
                    {"transitions", v.stats.transitions},
                    {"peak_frontier", v.stats.peak_frontier},
                    {"deadlocks", v.stats.deadlocks}};
  if (!v.message.empty()) j["message"] = v.message;
  return j;
}

json explore_stats_to_json(const ExploreStats& s) {
  json j;
  j["schema"] = 1;
  j["states"] = s.stats.states_stored;
  j["transitions"] = s.stats.transitions;
  j["deadlocks"] = s.stats.deadlocks;
  j["peak_frontier"] = s.stats.peak_frontier;
  j["bound"] = s.bound;
  j["within_bound"] = static_cast<double>(s.stats.states_stored) <= s.bound;
  j["complete"] = s.complete;
  if (!s.message.empty()) j["message"] = s.message;
  return j;
}

json bisim_report_to_json(const BisimReport& r) {
  json j;
  j["schema"] = 1;
  switch (r.status) {
    case BisimReport::Status::Bisimilar:
      j["result"] = "bisimilar";
      break;
    case BisimReport::Status::Mismatch:
      j["result"] = "mismatch";
      break;
    case BisimReport::Status::Inconclusive:
      j["result"] = "inconclusive";
      break;
  }
  j["horizon"] = r.horizon;
  j["clocked_states"] = r.clocked_states;
  j["clockless_states"] = r.clockless_states;
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

}  // namespace tocheck
