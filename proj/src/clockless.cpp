#include "tocheck/clockless.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace tocheck {

using json = nlohmann::ordered_json;

namespace {

bool guard_holds(const FlatEdge& e, const ClocklessState& s, std::int64_t sender = 0) {
  if (!e.guard) return true;
  return eval(*e.guard, ClocklessView{s, sender}) != 0;
}

void assign_checked(const FlatModel& fm, ClocklessState& ns, int var, std::int64_t value) {
  const FlatVar& v = fm.vars[static_cast<std::size_t>(var)];
  if (value < v.lo || value > v.hi)
    throw ModelError(fmt::format("assignment {} := {} leaves domain [{}, {}]", v.name, value, v.lo, v.hi));
  ns.vars[static_cast<std::size_t>(var)] = value;
}

// Moves process p along edge e with new relative timeout delta.
void apply_edge(const FlatModel& fm, int p, const FlatEdge& e, std::int64_t delta, ClocklessState& ns,
                std::int64_t sender = 0) {
  ns.locs[static_cast<std::size_t>(p)] = e.target;
  ns.timeouts[static_cast<std::size_t>(p)] = delta;
  for (int y : e.capture) {
    auto& v = ns.timing[static_cast<std::size_t>(y)];
    v = std::min(delta + v, fm.max_timeout);
  }
  for (const auto& a : e.assign) {
    std::int64_t value = eval(*a.value, ClocklessView{ns, sender});
    assign_checked(fm, ns, a.var, value);
  }
}

void reset_on_rise(const FlatModel& fm, const ClocklessState& before, ClocklessState& after) {
  if (!fm.accumulator) return;
  const auto& acc = *fm.accumulator;
  if (before.vars[static_cast<std::size_t>(acc.flag1)] == 0 && after.vars[static_cast<std::size_t>(acc.flag1)] != 0)
    after.vars[static_cast<std::size_t>(acc.var)] = 0;
}

bool at_zero_delay(const FlatModel& fm, const ClocklessState& s, int p) {
  const auto& proc = fm.processes[static_cast<std::size_t>(p)];
  return proc.locations[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(p)])].zero_delay;
}

}  // namespace

std::vector<std::int64_t> eval_update(const FlatModel& fm, const FlatUpdate& rule, const ClocklessState& s) {
  const std::int64_t max_t = fm.max_timeout;
  std::int64_t first = 1;
  std::int64_t last = max_t;
  auto base = [&](int w) { return w >= 0 ? s.timing[static_cast<std::size_t>(w)] : 0; };
  switch (rule.kind) {
    case UpdateRule::Kind::Interval: {
      std::int64_t lo = rule.lo - base(rule.lo_base);
      std::int64_t hi = rule.hi - base(rule.hi_base);
      first = std::max<std::int64_t>(1, rule.lo_strict ? lo + 1 : lo);
      last = std::min(max_t, rule.hi_strict ? hi - 1 : hi);
      break;
    }
    case UpdateRule::Kind::LowerBound: {
      std::int64_t lo = rule.lo - base(rule.lo_base);
      first = std::max<std::int64_t>(1, rule.lo_strict ? lo + 1 : lo);
      break;
    }
    case UpdateRule::Kind::Infinity:
      first = max_t;
      break;
    case UpdateRule::Kind::MaxM:
      last = std::min(max_t, fm.max_constant + 1);
      break;
  }
  if (first > last) throw ModelError("unsatisfiable update: no increment in [1, " + std::to_string(max_t) + "]");
  std::vector<std::int64_t> out;
  for (std::int64_t d = first; d <= last; ++d) out.push_back(d);
  return out;
}

std::vector<ClocklessState> initial_states(const FlatModel& fm) {
  ClocklessState base;
  const std::size_t n = fm.processes.size();
  base.locs.resize(n);
  base.timeouts.resize(n);
  base.timing.resize(fm.timing.size());
  base.vars.resize(fm.vars.size());
  for (std::size_t p = 0; p < n; ++p) base.locs[p] = fm.processes[p].entry;

  // Odometer over every range choice: timeouts, timing variables, variables.
  std::vector<const std::vector<std::int64_t>*> choices;
  std::vector<std::int64_t*> slots;
  for (std::size_t p = 0; p < n; ++p) {
    const auto& init = fm.processes[p].timeout_init;
    for (auto v : init)
      if (v < 0 || v > fm.max_timeout)
        throw ModelError(fmt::format("initial timeout {} of {} outside [0, {}]", v, fm.processes[p].name, fm.max_timeout));
    choices.push_back(&init);
    slots.push_back(&base.timeouts[p]);
  }
  for (std::size_t t = 0; t < fm.timing.size(); ++t) {
    choices.push_back(&fm.timing[t].init);
    slots.push_back(&base.timing[t]);
  }
  for (std::size_t v = 0; v < fm.vars.size(); ++v) {
    choices.push_back(&fm.vars[v].init);
    slots.push_back(&base.vars[v]);
  }
  for (const auto* c : choices)
    if (c->empty()) return {};

  std::vector<ClocklessState> out;
  std::vector<std::size_t> idx(choices.size(), 0);
  for (;;) {
    for (std::size_t k = 0; k < choices.size(); ++k) *slots[k] = (*choices[k])[idx[k]];
    out.push_back(base);
    std::size_t k = choices.size();
    while (k > 0) {
      --k;
      if (++idx[k] < choices[k]->size()) break;
      idx[k] = 0;
      if (k == 0) return out;
    }
    if (choices.empty()) return out;
  }
}

std::vector<ClocklessSuccessor> successors(const FlatModel& fm, const ClocklessState& s) {
  std::vector<ClocklessSuccessor> out;
  const int n = static_cast<int>(fm.processes.size());

  bool zero_delay = false;
  for (int p = 0; p < n; ++p) zero_delay = zero_delay || at_zero_delay(fm, s, p);
  std::int64_t m = INT64_MAX;
  for (auto t : s.timeouts) m = std::min(m, t);
  for (const auto& c : s.calendar) m = std::min(m, c.remaining);

  if (!zero_delay && m > 0 && m != INT64_MAX) {
    ClocklessSuccessor succ;
    succ.label.kind = TransitionLabel::Kind::TimeProgress;
    succ.label.delta = m;
    succ.state = s;
    for (auto& t : succ.state.timeouts) t -= m;
    for (auto& c : succ.state.calendar) c.remaining -= m;
    if (fm.accumulator) {
      const auto& acc = *fm.accumulator;
      if (s.vars[static_cast<std::size_t>(acc.flag1)] != 0 && s.vars[static_cast<std::size_t>(acc.flag2)] == 0) {
        auto& v = succ.state.vars[static_cast<std::size_t>(acc.var)];
        v = std::min(v + m, fm.vars[static_cast<std::size_t>(acc.var)].hi);
      }
    }
    out.push_back(std::move(succ));
    return out;
  }

  for (int p = 0; p < n; ++p) {
    const auto& proc = fm.processes[static_cast<std::size_t>(p)];
    const bool bypass = at_zero_delay(fm, s, p);
    const bool expired = s.timeouts[static_cast<std::size_t>(p)] == 0 || bypass;
    const std::int64_t floor_p = expired ? 0 : s.timeouts[static_cast<std::size_t>(p)];
    for (int ei : proc.out_edges[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(p)])]) {
      const FlatEdge& e = proc.edges[static_cast<std::size_t>(ei)];
      switch (e.kind) {
        case EdgeKind::Timeout: {
          if (!expired || !guard_holds(e, s)) break;
          for (std::int64_t d : eval_update(fm, e.update, s)) {
            ClocklessSuccessor succ;
            succ.label = TransitionLabel{TransitionLabel::Kind::Timeout, p, ei, d};
            succ.state = s;
            apply_edge(fm, p, e, d, succ.state);
            reset_on_rise(fm, s, succ.state);
            out.push_back(std::move(succ));
          }
          break;
        }
        case EdgeKind::SyncSend: {
          if (!(expired || fm.sync_eager) || !guard_holds(e, s)) break;
          std::int64_t payload = e.payload ? eval(*e.payload, ClocklessView{s}) : 0;
          std::vector<std::int64_t> ds;
          for (std::int64_t d : eval_update(fm, e.update, s))
            if (d > floor_p) ds.push_back(d);
          for (int q = 0; q < n; ++q) {
            if (q == p) continue;
            const auto& rproc = fm.processes[static_cast<std::size_t>(q)];
            const std::int64_t floor_q =
                at_zero_delay(fm, s, q) ? 0 : s.timeouts[static_cast<std::size_t>(q)];
            for (int fi : rproc.out_edges[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(q)])]) {
              const FlatEdge& f = rproc.edges[static_cast<std::size_t>(fi)];
              if (f.kind != EdgeKind::SyncRecv || f.channel != e.channel || !guard_holds(f, s)) continue;
              std::vector<std::int64_t> dr;
              for (std::int64_t d : eval_update(fm, f.update, s))
                if (d > floor_q) dr.push_back(d);
              for (std::int64_t d1 : ds)
                for (std::int64_t d2 : dr) {
                  ClocklessSuccessor succ;
                  succ.label.kind = TransitionLabel::Kind::Sync;
                  succ.label.process = p;
                  succ.label.edge = ei;
                  succ.label.delta = d1;
                  succ.label.partner = q;
                  succ.label.partner_edge = fi;
                  succ.label.partner_delta = d2;
                  succ.state = s;
                  apply_edge(fm, p, e, d1, succ.state);
                  if (f.payload_var >= 0) assign_checked(fm, succ.state, f.payload_var, payload);
                  apply_edge(fm, q, f, d2, succ.state);
                  reset_on_rise(fm, s, succ.state);
                  out.push_back(std::move(succ));
                }
            }
          }
          break;
        }
        case EdgeKind::CalSend: {
          if (!expired || !guard_holds(e, s)) break;
          if (s.calendar.size() + e.targets.size() > static_cast<std::size_t>(fm.calendar_capacity))
            throw ModelError(fmt::format("calendar overflow: {} sends {} with {} of {} entries in use", proc.name,
                                         fm.messages[static_cast<std::size_t>(e.channel)], s.calendar.size(),
                                         fm.calendar_capacity));
          for (std::int64_t d : eval_update(fm, e.update, s)) {
            ClocklessSuccessor succ;
            succ.label = TransitionLabel{TransitionLabel::Kind::Send, p, ei, d};
            succ.state = s;
            for (const auto& t : e.targets)
              succ.state.calendar.push_back(CalendarEntry{e.channel, p, t.process, t.delay});
            std::sort(succ.state.calendar.begin(), succ.state.calendar.end());
            apply_edge(fm, p, e, d, succ.state);
            reset_on_rise(fm, s, succ.state);
            out.push_back(std::move(succ));
          }
          break;
        }
        case EdgeKind::CalRecv: {
          for (std::size_t ci = 0; ci < s.calendar.size(); ++ci) {
            const CalendarEntry& c = s.calendar[ci];
            if (c.remaining != 0 || c.receiver != p || c.message != e.channel) continue;
            if (e.from_process >= 0 && c.sender != e.from_process) continue;
            // Identical entries yield identical successors; consume the first.
            if (ci > 0 && s.calendar[ci - 1] == c) continue;
            const std::int64_t sv = sender_value(fm, c.sender);
            if (!guard_holds(e, s, sv)) continue;
            for (std::int64_t d : eval_update(fm, e.update, s)) {
              ClocklessSuccessor succ;
              succ.label = TransitionLabel{TransitionLabel::Kind::Receive, p, ei, d};
              succ.label.message = c.message;
              succ.label.sender = c.sender;
              succ.state = s;
              succ.state.calendar.erase(succ.state.calendar.begin() + static_cast<std::ptrdiff_t>(ci));
              apply_edge(fm, p, e, d, succ.state, sv);
              reset_on_rise(fm, s, succ.state);
              out.push_back(std::move(succ));
            }
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

// ---------------------------------------------------------------------------

std::string format_label(const FlatModel& fm, const TransitionLabel& l) {
  auto pname = [&](int p) { return fm.processes[static_cast<std::size_t>(p)].name; };
  auto edge_text = [&](int p, int e) {
    const auto& proc = fm.processes[static_cast<std::size_t>(p)];
    const auto& edge = proc.edges[static_cast<std::size_t>(e)];
    return proc.locations[static_cast<std::size_t>(edge.source)].name + " -> " +
           proc.locations[static_cast<std::size_t>(edge.target)].name;
  };
  switch (l.kind) {
    case TransitionLabel::Kind::TimeProgress:
      return fmt::format("time progress +{}", l.delta);
    case TransitionLabel::Kind::Stutter:
      return "stutter (deadlock)";
    case TransitionLabel::Kind::Timeout:
      return fmt::format("{}: {} timeout={}", pname(l.process), edge_text(l.process, l.edge), l.delta);
    case TransitionLabel::Kind::Send:
      return fmt::format("{}: {} send timeout={}", pname(l.process), edge_text(l.process, l.edge), l.delta);
    case TransitionLabel::Kind::Receive:
      return fmt::format("{}: {} receive {} from {} timeout={}", pname(l.process), edge_text(l.process, l.edge),
                         fm.messages[static_cast<std::size_t>(l.message)], pname(l.sender), l.delta);
    case TransitionLabel::Kind::Sync:
      return fmt::format("sync {} ({}, timeout={}) with {} ({}, timeout={})", pname(l.process),
                         edge_text(l.process, l.edge), l.delta, pname(l.partner), edge_text(l.partner, l.partner_edge),
                         l.partner_delta);
  }
  return "?";
}

json label_to_json(const FlatModel& fm, const TransitionLabel& l) {
  auto pname = [&](int p) { return fm.processes[static_cast<std::size_t>(p)].name; };
  json j;
  switch (l.kind) {
    case TransitionLabel::Kind::TimeProgress:
      j["kind"] = "time_progress";
      j["amount"] = l.delta;
      return j;
    case TransitionLabel::Kind::Stutter:
      j["kind"] = "stutter";
      return j;
    case TransitionLabel::Kind::Timeout:
      j["kind"] = "timeout";
      break;
    case TransitionLabel::Kind::Send:
      j["kind"] = "send";
      break;
    case TransitionLabel::Kind::Receive:
      j["kind"] = "receive";
      break;
    case TransitionLabel::Kind::Sync:
      j["kind"] = "sync";
      break;
  }
  j["process"] = pname(l.process);
  j["edge"] = l.edge;
  j["delta"] = l.delta;
  if (l.kind == TransitionLabel::Kind::Receive) {
    j["message"] = fm.messages[static_cast<std::size_t>(l.message)];
    j["sender"] = pname(l.sender);
  }
  if (l.kind == TransitionLabel::Kind::Sync) {
    j["receiver"] = pname(l.partner);
    j["receiver_edge"] = l.partner_edge;
    j["receiver_delta"] = l.partner_delta;
  }
  return j;
}

json state_to_json(const FlatModel& fm, const ClocklessState& s) {
  json j;
  json locs = json::object(), timeouts = json::object(), vars = json::object(), timing = json::object();
  for (std::size_t p = 0; p < fm.processes.size(); ++p) {
    const auto& proc = fm.processes[p];
    locs[proc.name] = proc.locations[static_cast<std::size_t>(s.locs[p])].name;
    timeouts[proc.name] = s.timeouts[p];
  }
  for (std::size_t v = 0; v < fm.vars.size(); ++v) vars[fm.vars[v].name] = s.vars[v];
  for (std::size_t t = 0; t < fm.timing.size(); ++t) timing[fm.timing[t].name] = s.timing[t];
  json cal = json::array();
  for (const auto& c : s.calendar)
    cal.push_back(json{{"message", fm.messages[static_cast<std::size_t>(c.message)]},
                       {"sender", fm.processes[static_cast<std::size_t>(c.sender)].name},
                       {"receiver", fm.processes[static_cast<std::size_t>(c.receiver)].name},
                       {"remaining", c.remaining}});
  j["locs"] = std::move(locs);
  j["timeouts"] = std::move(timeouts);
  j["vars"] = std::move(vars);
  j["timing"] = std::move(timing);
  j["calendar"] = std::move(cal);
  return j;
}

ClocklessState state_from_json(const FlatModel& fm, const json& j) {
  ClocklessState s;
  const std::size_t n = fm.processes.size();
  s.locs.resize(n);
  s.timeouts.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const auto& proc = fm.processes[p];
    const std::string loc = j.at("locs").at(proc.name).get<std::string>();
    int idx = -1;
    for (std::size_t l = 0; l < proc.locations.size(); ++l)
      if (proc.locations[l].name == loc) idx = static_cast<int>(l);
    if (idx < 0) throw std::invalid_argument("unknown location '" + loc + "' for " + proc.name);
    s.locs[p] = idx;
    s.timeouts[p] = j.at("timeouts").at(proc.name).get<std::int64_t>();
  }
  for (const auto& v : fm.vars) s.vars.push_back(j.at("vars").at(v.name).get<std::int64_t>());
  for (const auto& t : fm.timing) s.timing.push_back(j.at("timing").at(t.name).get<std::int64_t>());
  auto index_of = [](const auto& names, const std::string& n) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return static_cast<int>(i);
    throw std::invalid_argument("unknown name '" + n + "'");
  };
  std::vector<std::string> pnames;
  for (const auto& p : fm.processes) pnames.push_back(p.name);
  for (const auto& c : j.at("calendar"))
    s.calendar.push_back(CalendarEntry{index_of(fm.messages, c.at("message").get<std::string>()),
                                       index_of(pnames, c.at("sender").get<std::string>()),
                                       index_of(pnames, c.at("receiver").get<std::string>()),
                                       c.at("remaining").get<std::int64_t>()});
  std::sort(s.calendar.begin(), s.calendar.end());
  return s;
}

std::size_t packed_width(const FlatModel& fm) {
  return 2 * fm.processes.size() + fm.timing.size() + fm.vars.size() +
         4 * static_cast<std::size_t>(fm.calendar_capacity);
}

void pack_state(const FlatModel& fm, const ClocklessState& s, std::int32_t* out) {
  std::size_t k = 0;
  for (int l : s.locs) out[k++] = l;
  for (auto t : s.timeouts) out[k++] = static_cast<std::int32_t>(t);
  for (auto t : s.timing) out[k++] = static_cast<std::int32_t>(t);
  for (auto v : s.vars) out[k++] = static_cast<std::int32_t>(v);
  for (int c = 0; c < fm.calendar_capacity; ++c) {
    if (static_cast<std::size_t>(c) < s.calendar.size()) {
      const auto& e = s.calendar[static_cast<std::size_t>(c)];
      out[k++] = e.message;
      out[k++] = e.sender;
      out[k++] = e.receiver;
      out[k++] = static_cast<std::int32_t>(e.remaining);
    } else {
      for (int z = 0; z < 4; ++z) out[k++] = -1;
    }
  }
}

ClocklessState unpack_state(const FlatModel& fm, const std::int32_t* in) {
  ClocklessState s;
  std::size_t k = 0;
  const std::size_t n = fm.processes.size();
  s.locs.resize(n);
  s.timeouts.resize(n);
  s.timing.resize(fm.timing.size());
  s.vars.resize(fm.vars.size());
  for (auto& l : s.locs) l = in[k++];
  for (auto& t : s.timeouts) t = in[k++];
  for (auto& t : s.timing) t = in[k++];
  for (auto& v : s.vars) v = in[k++];
  for (int c = 0; c < fm.calendar_capacity; ++c) {
    if (in[k] < 0) break;
    s.calendar.push_back(CalendarEntry{in[k], in[k + 1], in[k + 2], in[k + 3]});
    k += 4;
  }
  return s;
}

}  // namespace tocheck
