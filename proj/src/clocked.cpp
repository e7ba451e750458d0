#include "tocheck/clocked.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace tocheck {

using json = nlohmann::ordered_json;

bool operator<(const ClockedEntry& a, const ClockedEntry& b) {
  if (a.due != b.due) return a.due < b.due;
  return std::tie(a.message, a.sender, a.receiver) < std::tie(b.message, b.sender, b.receiver);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    std::uint64_t x = engine_();
    if (x < limit) return x % n;
  }
}

// ---------------------------------------------------------------------------
// Increment ranges

bool IncrementRange::contains(const Rational& x) const {
  bool above = lo_strict ? x > lo : x >= lo;
  bool below = hi_strict ? x < hi : x <= hi;
  return above && below;
}

bool IncrementRange::empty() const { return lo > hi || (lo == hi && (lo_strict || hi_strict)); }

std::vector<std::int64_t> IncrementRange::integers() const {
  std::int64_t first = lo_strict ? floor_of(lo) + 1 : ceil_of(lo);
  std::int64_t last = hi_strict ? ceil_of(hi) - 1 : floor_of(hi);
  std::vector<std::int64_t> out;
  for (std::int64_t d = first; d <= last; ++d) out.push_back(d);
  return out;
}

IncrementRange increment_range(const FlatModel& fm, const FlatUpdate& rule, const ClockedState& s, TimeMode mode) {
  const Rational max_t(fm.max_timeout);
  auto shift = [&](int w) { return w >= 0 ? s.timing[static_cast<std::size_t>(w)] - s.t : Rational(0); };
  IncrementRange r;
  r.hi = max_t;
  switch (rule.kind) {
    case UpdateRule::Kind::Interval:
      r.lo = Rational(rule.lo) + shift(rule.lo_base);
      r.lo_strict = rule.lo_strict;
      r.hi = Rational(rule.hi) + shift(rule.hi_base);
      r.hi_strict = rule.hi_strict;
      break;
    case UpdateRule::Kind::LowerBound:
      r.lo = Rational(rule.lo) + shift(rule.lo_base);
      r.lo_strict = rule.lo_strict;
      break;
    case UpdateRule::Kind::Infinity:
      r.lo = max_t;
      return r;
    case UpdateRule::Kind::MaxM:
      r.lo = 1;
      r.hi = std::min(max_t, Rational(fm.max_constant + 1));
      return r;
  }
  if (r.hi > max_t) {
    r.hi = max_t;
    r.hi_strict = false;
  }
  if (mode == TimeMode::Integral) {
    if (r.lo < 1) {
      r.lo = 1;
      r.lo_strict = false;
    }
  } else if (r.lo <= 0) {
    r.lo = 0;
    r.lo_strict = true;
  }
  return r;
}

namespace {

// Restricts r to values strictly above `floor`.
IncrementRange above(IncrementRange r, const Rational& floor) {
  if (floor >= r.lo) {
    r.lo = floor;
    r.lo_strict = true;
  }
  return r;
}

bool at_zero_delay(const FlatModel& fm, const ClockedState& s, int p) {
  const auto& proc = fm.processes[static_cast<std::size_t>(p)];
  return proc.locations[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(p)])].zero_delay;
}

bool guard_holds(const FlatEdge& e, const ClockedState& s, std::int64_t sender = 0) {
  return !e.guard || eval(*e.guard, ClockedView{s, sender}) != 0;
}

// One discrete move before its increments are chosen.
struct Move {
  TransitionLabel::Kind kind = TransitionLabel::Kind::Timeout;
  int p = -1;
  int e = -1;
  int q = -1;  // sync receiver
  int f = -1;
  int entry = -1;  // calendar index for receives
  std::int64_t sender_value = 0;
  std::int64_t payload = 0;
  IncrementRange r1;  // actor, already restricted by its floor
  IncrementRange r2;  // sync receiver
};

struct Enabled {
  bool time_progress = false;
  Rational target;
  std::vector<Move> moves;
};

IncrementRange checked_range(const FlatModel& fm, const FlatUpdate& rule, const ClockedState& s, TimeMode mode,
                             const std::string& who) {
  IncrementRange r = increment_range(fm, rule, s, mode);
  bool none = mode == TimeMode::Integral ? r.integers().empty() : r.empty();
  if (none) throw ModelError("unsatisfiable update for " + who + " at time " + to_string(s.t));
  return r;
}

Enabled enabled(const FlatModel& fm, const ClockedState& s, TimeMode mode) {
  Enabled out;
  const int n = static_cast<int>(fm.processes.size());
  bool zero_delay = false;
  for (int p = 0; p < n; ++p) zero_delay = zero_delay || at_zero_delay(fm, s, p);
  bool has_min = false;
  Rational m;
  auto consider = [&](const Rational& x) {
    if (!has_min || x < m) m = x;
    has_min = true;
  };
  for (const auto& x : s.timeouts) consider(x);
  for (const auto& c : s.calendar) consider(c.due);
  if (!zero_delay && has_min && s.t < m) {
    out.time_progress = true;
    out.target = m;
    return out;
  }

  for (int p = 0; p < n; ++p) {
    const auto& proc = fm.processes[static_cast<std::size_t>(p)];
    const bool expired = at_zero_delay(fm, s, p) || s.timeouts[static_cast<std::size_t>(p)] == s.t;
    const Rational floor_p = expired ? Rational(0) : s.timeouts[static_cast<std::size_t>(p)] - s.t;
    for (int ei : proc.out_edges[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(p)])]) {
      const FlatEdge& e = proc.edges[static_cast<std::size_t>(ei)];
      Move mv;
      mv.p = p;
      mv.e = ei;
      switch (e.kind) {
        case EdgeKind::Timeout:
        case EdgeKind::CalSend: {
          if (!expired || !guard_holds(e, s)) break;
          if (e.kind == EdgeKind::CalSend &&
              s.calendar.size() + e.targets.size() > static_cast<std::size_t>(fm.calendar_capacity))
            throw ModelError(fmt::format("calendar overflow: {} sends {} with {} of {} entries in use", proc.name,
                                         fm.messages[static_cast<std::size_t>(e.channel)], s.calendar.size(),
                                         fm.calendar_capacity));
          mv.kind = e.kind == EdgeKind::Timeout ? TransitionLabel::Kind::Timeout : TransitionLabel::Kind::Send;
          mv.r1 = checked_range(fm, e.update, s, mode, proc.name);
          out.moves.push_back(mv);
          break;
        }
        case EdgeKind::SyncSend: {
          if (!(expired || fm.sync_eager) || !guard_holds(e, s)) break;
          mv.kind = TransitionLabel::Kind::Sync;
          mv.payload = e.payload ? eval(*e.payload, ClockedView{s}) : 0;
          mv.r1 = above(checked_range(fm, e.update, s, mode, proc.name), floor_p);
          for (int q = 0; q < n; ++q) {
            if (q == p) continue;
            const auto& rproc = fm.processes[static_cast<std::size_t>(q)];
            const Rational floor_q =
                at_zero_delay(fm, s, q) ? Rational(0) : s.timeouts[static_cast<std::size_t>(q)] - s.t;
            for (int fi : rproc.out_edges[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(q)])]) {
              const FlatEdge& f = rproc.edges[static_cast<std::size_t>(fi)];
              if (f.kind != EdgeKind::SyncRecv || f.channel != e.channel || !guard_holds(f, s)) continue;
              Move pair = mv;
              pair.q = q;
              pair.f = fi;
              pair.r2 = above(checked_range(fm, f.update, s, mode, rproc.name), floor_q);
              out.moves.push_back(pair);
            }
          }
          break;
        }
        case EdgeKind::CalRecv: {
          for (std::size_t ci = 0; ci < s.calendar.size(); ++ci) {
            const ClockedEntry& c = s.calendar[ci];
            if (c.due != s.t || c.receiver != p || c.message != e.channel) continue;
            if (e.from_process >= 0 && c.sender != e.from_process) continue;
            if (ci > 0 && s.calendar[ci - 1] == c) continue;
            const std::int64_t sv = sender_value(fm, c.sender);
            if (!guard_holds(e, s, sv)) continue;
            Move rm = mv;
            rm.kind = TransitionLabel::Kind::Receive;
            rm.entry = static_cast<int>(ci);
            rm.sender_value = sv;
            rm.r1 = checked_range(fm, e.update, s, mode, proc.name);
            out.moves.push_back(rm);
          }
          break;
        }
        case EdgeKind::SyncRecv:
          break;
      }
    }
  }
  return out;
}

void assign_checked(const FlatModel& fm, ClockedState& ns, int var, std::int64_t value) {
  const FlatVar& v = fm.vars[static_cast<std::size_t>(var)];
  if (value < v.lo || value > v.hi)
    throw ModelError(fmt::format("assignment {} := {} leaves domain [{}, {}]", v.name, value, v.lo, v.hi));
  ns.vars[static_cast<std::size_t>(var)] = value;
}

void apply_edge(const FlatModel& fm, int p, const FlatEdge& e, const Rational& d, ClockedState& ns,
                std::int64_t sender = 0) {
  ns.locs[static_cast<std::size_t>(p)] = e.target;
  ns.timeouts[static_cast<std::size_t>(p)] = ns.t + d;
  for (int y : e.capture) ns.timing[static_cast<std::size_t>(y)] = ns.t;
  for (const auto& a : e.assign) assign_checked(fm, ns, a.var, eval(*a.value, ClockedView{ns, sender}));
}

ClockedState apply_move(const FlatModel& fm, const ClockedState& s, const Move& mv, const Rational& d1,
                        const Rational& d2) {
  ClockedState ns = s;
  const auto& proc = fm.processes[static_cast<std::size_t>(mv.p)];
  const FlatEdge& e = proc.edges[static_cast<std::size_t>(mv.e)];
  switch (mv.kind) {
    case TransitionLabel::Kind::Send:
      for (const auto& t : e.targets)
        ns.calendar.push_back(ClockedEntry{e.channel, mv.p, t.process, s.t + Rational(t.delay)});
      std::sort(ns.calendar.begin(), ns.calendar.end());
      apply_edge(fm, mv.p, e, d1, ns);
      break;
    case TransitionLabel::Kind::Receive:
      ns.calendar.erase(ns.calendar.begin() + mv.entry);
      apply_edge(fm, mv.p, e, d1, ns, mv.sender_value);
      break;
    case TransitionLabel::Kind::Sync: {
      const FlatEdge& f = fm.processes[static_cast<std::size_t>(mv.q)].edges[static_cast<std::size_t>(mv.f)];
      apply_edge(fm, mv.p, e, d1, ns);
      if (f.payload_var >= 0) assign_checked(fm, ns, f.payload_var, mv.payload);
      apply_edge(fm, mv.q, f, d2, ns);
      break;
    }
    default:
      apply_edge(fm, mv.p, e, d1, ns);
      break;
  }
  if (fm.accumulator) {
    const auto& acc = *fm.accumulator;
    if (s.vars[static_cast<std::size_t>(acc.flag1)] == 0 && ns.vars[static_cast<std::size_t>(acc.flag1)] != 0)
      ns.vars[static_cast<std::size_t>(acc.var)] = 0;
  }
  return ns;
}

TransitionLabel label_of(const FlatModel& fm, const ClockedState& s, const Move& mv, std::int64_t d1,
                         std::int64_t d2) {
  TransitionLabel l;
  l.kind = mv.kind;
  l.process = mv.p;
  l.edge = mv.e;
  l.delta = d1;
  if (mv.kind == TransitionLabel::Kind::Sync) {
    l.partner = mv.q;
    l.partner_edge = mv.f;
    l.partner_delta = d2;
  }
  if (mv.kind == TransitionLabel::Kind::Receive) {
    const auto& c = s.calendar[static_cast<std::size_t>(mv.entry)];
    l.message = c.message;
    l.sender = c.sender;
  }
  (void)fm;
  return l;
}

ClockedState advance(const FlatModel& fm, const ClockedState& s, const Rational& target) {
  ClockedState ns = s;
  ns.t = target;
  if (fm.accumulator) {
    const auto& acc = *fm.accumulator;
    if (s.vars[static_cast<std::size_t>(acc.flag1)] != 0 && s.vars[static_cast<std::size_t>(acc.flag2)] == 0) {
      auto& v = ns.vars[static_cast<std::size_t>(acc.var)];
      v = std::min(v + floor_of(target - s.t), fm.vars[static_cast<std::size_t>(acc.var)].hi);
    }
  }
  return ns;
}

}  // namespace

std::vector<ClockedState> initial_states_clocked(const FlatModel& fm) {
  std::vector<ClockedState> out;
  for (const auto& cs : initial_states(fm)) {
    ClockedState s;
    s.t = 0;
    s.locs = cs.locs;
    for (auto x : cs.timeouts) s.timeouts.emplace_back(x);
    for (auto x : cs.timing) s.timing.emplace_back(x);
    s.vars = cs.vars;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ClockedSuccessor> successors_clocked(const FlatModel& fm, const ClockedState& s) {
  std::vector<ClockedSuccessor> out;
  Enabled en = enabled(fm, s, TimeMode::Integral);
  if (en.time_progress) {
    ClockedSuccessor succ;
    succ.label.kind = TransitionLabel::Kind::TimeProgress;
    succ.label.delta = floor_of(en.target - s.t);
    succ.state = advance(fm, s, en.target);
    out.push_back(std::move(succ));
    return out;
  }
  for (const Move& mv : en.moves) {
    const auto d1s = mv.r1.integers();
    const auto d2s = mv.kind == TransitionLabel::Kind::Sync ? mv.r2.integers() : std::vector<std::int64_t>{0};
    for (auto d1 : d1s)
      for (auto d2 : d2s)
        out.push_back(ClockedSuccessor{label_of(fm, s, mv, d1, d2), apply_move(fm, s, mv, d1, d2)});
  }
  return out;
}

ClocklessState normalize_clocked(const ClockedState& cs) {
  if (!cs.timing.empty()) throw std::invalid_argument("normalize_clocked: timing variables are not supported");
  if (!is_integral(cs.t)) throw std::invalid_argument("normalize_clocked: non-integral time " + to_string(cs.t));
  ClocklessState s;
  s.locs = cs.locs;
  s.vars = cs.vars;
  auto rel = [&](const Rational& x) {
    if (x < cs.t || !is_integral(x))
      throw std::invalid_argument("normalize_clocked: inconsistent time value " + to_string(x) + " at t = " +
                                  to_string(cs.t));
    return floor_of(x - cs.t);
  };
  for (const auto& x : cs.timeouts) s.timeouts.push_back(rel(x));
  for (const auto& c : cs.calendar) s.calendar.push_back(CalendarEntry{c.message, c.sender, c.receiver, rel(c.due)});
  std::sort(s.calendar.begin(), s.calendar.end());
  return s;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

Rational sample(Rng& rng, const IncrementRange& r) {
  const std::int64_t q0 = 1 + static_cast<std::int64_t>(rng.below(8));
  for (std::int64_t i = 0; i < 8; ++i) {
    const std::int64_t q = 1 + (q0 - 1 + i) % 8;
    IncrementRange scaled{r.lo * q, r.lo_strict, r.hi * q, r.hi_strict};
    auto ks = scaled.integers();
    if (!ks.empty()) return Rational(ks[rng.below(ks.size())], q);
  }
  // Only reachable when a bound carries a timing base with a large denominator.
  if (!r.lo_strict) return r.lo;
  if (!r.hi_strict) return r.hi;
  return (r.lo + r.hi) / 2;
}

std::string deadlock_reason(const ClockedState& s) {
  for (const auto& c : s.calendar)
    if (c.due == s.t) return "unconsumed expired message";
  return "no enabled transition";
}

template <class Step>
TimedTrace simulate(const FlatModel& fm, std::uint64_t seed, const Rational& max_time, std::size_t max_steps,
                    TimeMode mode, Step step) {
  Rng rng(seed);
  TimedTrace tr;
  tr.mode = mode;
  auto inits = initial_states_clocked(fm);
  if (inits.empty()) {
    tr.deadlock = true;
    tr.deadlock_reason = "no initial state";
    return tr;
  }
  tr.states.push_back(inits[rng.below(inits.size())]);
  while (tr.labels.size() < max_steps) {
    const ClockedState& s = tr.states.back();
    std::optional<ClockedSuccessor> next = step(rng, s);
    if (!next) {
      tr.deadlock = true;
      tr.deadlock_reason = deadlock_reason(s);
      break;
    }
    if (next->state.t > max_time) break;
    tr.labels.push_back(next->label);
    tr.states.push_back(std::move(next->state));
  }
  return tr;
}

}  // namespace

TimedTrace simulate_integral(const FlatModel& fm, std::uint64_t seed, const Rational& max_time,
                             std::size_t max_steps) {
  return simulate(fm, seed, max_time, max_steps, TimeMode::Integral,
                  [&](Rng& rng, const ClockedState& s) -> std::optional<ClockedSuccessor> {
                    auto succ = successors_clocked(fm, s);
                    if (succ.empty()) return std::nullopt;
                    return succ[rng.below(succ.size())];
                  });
}

TimedTrace simulate_dense(const FlatModel& fm, std::uint64_t seed, const Rational& max_time, std::size_t max_steps) {
  return simulate(fm, seed, max_time, max_steps, TimeMode::Dense,
                  [&](Rng& rng, const ClockedState& s) -> std::optional<ClockedSuccessor> {
                    Enabled en = enabled(fm, s, TimeMode::Dense);
                    if (en.time_progress) {
                      ClockedSuccessor succ;
                      succ.label.kind = TransitionLabel::Kind::TimeProgress;
                      succ.state = advance(fm, s, en.target);
                      return succ;
                    }
                    std::vector<const Move*> live;
                    for (const Move& mv : en.moves)
                      if (!mv.r1.empty() && (mv.kind != TransitionLabel::Kind::Sync || !mv.r2.empty()))
                        live.push_back(&mv);
                    if (live.empty()) return std::nullopt;
                    const Move& mv = *live[rng.below(live.size())];
                    Rational d1 = sample(rng, mv.r1);
                    Rational d2 = mv.kind == TransitionLabel::Kind::Sync ? sample(rng, mv.r2) : Rational(0);
                    return ClockedSuccessor{label_of(fm, s, mv, 0, 0), apply_move(fm, s, mv, d1, d2)};
                  });
}

RunCheck is_integral_run(const FlatModel& fm, const TimedTrace& tr) {
  auto fail = [](std::size_t i, std::string why) { return RunCheck{false, i, std::move(why)}; };
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const auto& s = tr.states[i];
    bool integral = is_integral(s.t);
    for (const auto& x : s.timeouts) integral = integral && is_integral(x);
    for (const auto& x : s.timing) integral = integral && is_integral(x);
    for (const auto& c : s.calendar) integral = integral && is_integral(c.due);
    if (!integral) return fail(i, "non-integral time value");
    if (i > 0 && s.t < tr.states[i - 1].t) return fail(i, "time decreases");
  }
  if (tr.states.empty()) return {};
  auto inits = initial_states_clocked(fm);
  if (std::find(inits.begin(), inits.end(), tr.states[0]) == inits.end()) return fail(0, "not an initial state");
  for (std::size_t i = 1; i < tr.states.size(); ++i) {
    const auto& prev = tr.states[i - 1];
    const auto& cur = tr.states[i];
    if (prev == cur) continue;
    std::vector<ClockedSuccessor> succ;
    try {
      succ = successors_clocked(fm, prev);
    } catch (const ModelError& e) {
      return fail(i, std::string("model error: ") + e.what());
    }
    bool found = false;
    for (const auto& sc : succ) found = found || sc.state == cur;
    if (!found) return fail(i, "no integral transition leads here");
  }
  return {};
}

json clocked_state_to_json(const FlatModel& fm, const ClockedState& s) {
  json j;
  j["time"] = to_string(s.t);
  json locs = json::object(), timeouts = json::object(), vars = json::object(), timing = json::object();
  for (std::size_t p = 0; p < fm.processes.size(); ++p) {
    const auto& proc = fm.processes[p];
    locs[proc.name] = proc.locations[static_cast<std::size_t>(s.locs[p])].name;
    timeouts[proc.name] = to_string(s.timeouts[p]);
  }
  for (std::size_t v = 0; v < fm.vars.size(); ++v) vars[fm.vars[v].name] = s.vars[v];
  for (std::size_t t = 0; t < fm.timing.size(); ++t) timing[fm.timing[t].name] = to_string(s.timing[t]);
  json cal = json::array();
  for (const auto& c : s.calendar)
    cal.push_back(json{{"message", fm.messages[static_cast<std::size_t>(c.message)]},
                       {"sender", fm.processes[static_cast<std::size_t>(c.sender)].name},
                       {"receiver", fm.processes[static_cast<std::size_t>(c.receiver)].name},
                       {"due", to_string(c.due)}});
  j["locs"] = std::move(locs);
  j["timeouts"] = std::move(timeouts);
  j["vars"] = std::move(vars);
  j["timing"] = std::move(timing);
  j["calendar"] = std::move(cal);
  return j;
}

json trace_to_json(const FlatModel& fm, const TimedTrace& tr) {
  json j;
  j["schema"] = 1;
  j["mode"] = tr.mode == TimeMode::Integral ? "integral" : "dense";
  json obs = json::array();
  for (const auto& s : tr.states) obs.push_back(clocked_state_to_json(fm, s));
  json labels = json::array();
  for (std::size_t i = 0; i < tr.labels.size(); ++i) {
    const auto& l = tr.labels[i];
    const auto& a = tr.states[i];
    const auto& b = tr.states[i + 1];
    json lj = label_to_json(fm, l);
    // Increments are recomputed from the states so dense traces stay exact.
    if (l.kind == TransitionLabel::Kind::TimeProgress) {
      lj["amount"] = to_string(b.t - a.t);
    } else if (l.kind != TransitionLabel::Kind::Stutter) {
      lj["delta"] = to_string(b.timeouts[static_cast<std::size_t>(l.process)] - a.t);
      if (l.kind == TransitionLabel::Kind::Sync)
        lj["receiver_delta"] = to_string(b.timeouts[static_cast<std::size_t>(l.partner)] - a.t);
    }
    labels.push_back(std::move(lj));
  }
  j["observations"] = std::move(obs);
  j["labels"] = std::move(labels);
  j["deadlock"] = tr.deadlock;
  if (tr.deadlock) j["deadlock_reason"] = tr.deadlock_reason;
  return j;
}

}  // namespace tocheck
