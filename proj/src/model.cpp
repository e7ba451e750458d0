#include "tocheck/model.hpp"

#include <set>

#include <fmt/format.h>

namespace tocheck {

std::string format_diagnostic(const Diagnostic& d) {
  return format_span(d.span) + (d.severity == Severity::Error ? ": error: " : ": warning: ") + d.message;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::Error) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Structural equality (spans are ignored everywhere).

namespace {

bool eq(const ExprPtr& a, const ExprPtr& b) { return expr_equal(a, b); }

bool eq(const SendTarget& a, const SendTarget& b);
bool eq(const Assignment& a, const Assignment& b);
bool eq(const Edge& a, const Edge& b);
bool eq(const Location& a, const Location& b);
bool eq(const std::pair<std::string, InitRange>& a, const std::pair<std::string, InitRange>& b);
bool eq(const ProcessTemplate& a, const ProcessTemplate& b);
bool eq(const ConstDecl& a, const ConstDecl& b);
bool eq(const PropertyDecl& a, const PropertyDecl& b);
bool eq(const VarDecl& a, const VarDecl& b);
bool eq(const TimingDecl& a, const TimingDecl& b);

template <class T>
bool eq_vec(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!eq(a[i], b[i])) return false;
  return true;
}


bool eq(const InitRange& a, const InitRange& b) { return eq(a.lo, b.lo) && eq(a.hi, b.hi); }

bool eq(const VarDecl& a, const VarDecl& b) {
  return a.name == b.name && eq(a.lo, b.lo) && eq(a.hi, b.hi) && eq(a.init, b.init);
}

bool eq(const TimingDecl& a, const TimingDecl& b) {
  return a.name == b.name && eq(a.init_lo, b.init_lo) && eq(a.init_hi, b.init_hi);
}

bool eq(const UpdateRule& a, const UpdateRule& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case UpdateRule::Kind::Infinity:
    case UpdateRule::Kind::MaxM:
      return true;
    case UpdateRule::Kind::LowerBound:
      return a.lo_strict == b.lo_strict && a.lo_base == b.lo_base && eq(a.lo, b.lo);
    case UpdateRule::Kind::Interval:
      return a.lo_strict == b.lo_strict && a.hi_strict == b.hi_strict && a.lo_base == b.lo_base &&
             a.hi_base == b.hi_base && eq(a.lo, b.lo) && eq(a.hi, b.hi);
  }
  return false;
}

bool eq(const ProcRef& a, const ProcRef& b) {
  if (a.index && b.index) {
    if (!eq(a.index, b.index)) return false;
  } else if (a.index || b.index) {
    return false;
  }
  return a.others == b.others && a.any == b.any && a.name == b.name;
}

bool eq(const SendTarget& a, const SendTarget& b) { return eq(a.receiver, b.receiver) && eq(a.delay, b.delay); }

bool eq(const Assignment& a, const Assignment& b) { return a.var == b.var && eq(a.value, b.value); }

bool eq(const Edge& a, const Edge& b) {
  if (a.payload && b.payload) {
    if (!eq(a.payload, b.payload)) return false;
  } else if (a.payload || b.payload) {
    return false;
  }
  return a.source == b.source && a.target == b.target && eq(a.guard, b.guard) && a.kind == b.kind &&
         a.channel == b.channel && a.payload_var == b.payload_var && eq_vec(a.targets, b.targets) &&
         (a.kind != EdgeKind::CalRecv || eq(a.from, b.from)) && eq(a.update, b.update) && a.capture == b.capture &&
         eq_vec(a.assign, b.assign);
}

bool eq(const Location& a, const Location& b) {
  return a.id == b.id && a.kind == b.kind && a.zero_delay == b.zero_delay;
}

bool eq(const std::pair<std::string, InitRange>& a, const std::pair<std::string, InitRange>& b) {
  return a.first == b.first && eq(a.second, b.second);
}

bool eq(const ProcessTemplate& a, const ProcessTemplate& b) {
  if (a.init.timeout.has_value() != b.init.timeout.has_value()) return false;
  if (a.init.timeout && !eq(*a.init.timeout, *b.init.timeout)) return false;
  return a.name == b.name && a.param == b.param && a.count == b.count && eq_vec(a.locations, b.locations) &&
         a.entry == b.entry && eq_vec(a.locals, b.locals) && eq_vec(a.timing_vars, b.timing_vars) &&
         eq_vec(a.init.locals, b.init.locals) && eq_vec(a.edges, b.edges) && a.family == b.family &&
         a.family_index == b.family_index;
}

bool eq(const ConstDecl& a, const ConstDecl& b) { return a.name == b.name && eq(a.value, b.value); }

bool eq(const PropertyDecl& a, const PropertyDecl& b) {
  if (a.kind != b.kind || a.name != b.name) return false;
  if (a.kind == PropertyKind::Timeliness) return a.flag1 == b.flag1 && a.flag2 == b.flag2 && eq(a.bound, b.bound);
  return a.formula == b.formula;
}

bool eq_opt(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return eq(a, b);
}

}  // namespace

bool operator==(const Model& a, const Model& b) {
  return a.name == b.name && eq_vec(a.consts, b.consts) && eq_vec(a.globals, b.globals) &&
         a.channels == b.channels && a.messages == b.messages && eq_opt(a.max_timeout, b.max_timeout) &&
         eq_opt(a.calendar_capacity, b.calendar_capacity) && a.sync_eager == b.sync_eager &&
         eq_vec(a.processes, b.processes) && eq_vec(a.properties, b.properties);
}

// ---------------------------------------------------------------------------

Model desugar_locations(const Model& model) {
  auto pending = [](const Location& l) { return l.kind != LocationKind::Normal && !l.zero_delay; };
  bool any = false;
  for (const auto& p : model.processes)
    for (const auto& l : p.locations) any = any || pending(l);
  if (!any) return model;

  Model m = model;
  bool has_flag = false;
  for (const auto& g : m.globals) has_flag = has_flag || g.name == kCommittedFlag;
  if (!has_flag) {
    VarDecl flag;
    flag.name = kCommittedFlag;
    flag.lo = make_const(0);
    flag.hi = make_const(2);
    flag.init = make_const(0);
    m.globals.push_back(flag);
  }
  const ExprPtr not_committed =
      make_binary(Op::Ne, make_ref(kCommittedFlag), make_const(1));

  for (auto& p : m.processes) {
    auto kind_of = [&](const std::string& id) {
      for (const auto& l : p.locations)
        if (l.id == id) return l.kind;
      return LocationKind::Normal;
    };
    for (auto& e : p.edges) {
      const LocationKind src = kind_of(e.source);
      const LocationKind dst = kind_of(e.target);
      if (dst != LocationKind::Normal) {
        e.update = UpdateRule{};
        e.update.kind = UpdateRule::Kind::Interval;
        e.update.lo = make_const(1);
        e.update.hi = make_const(1);
        e.assign.push_back({kCommittedFlag, make_const(dst == LocationKind::Committed ? 1 : 2)});
      } else if (src != LocationKind::Normal) {
        e.assign.push_back({kCommittedFlag, make_const(0)});
      }
      if (src != LocationKind::Committed) {
        e.guard = is_true_literal(e.guard) ? not_committed : make_binary(Op::And, e.guard, not_committed);
      }
    }
    for (auto& l : p.locations)
      if (l.kind != LocationKind::Normal) l.zero_delay = true;
  }
  return m;
}

// ---------------------------------------------------------------------------

int FlatModel::find_process(const std::string& name) const {
  for (std::size_t i = 0; i < processes.size(); ++i)
    if (processes[i].name == name) return static_cast<int>(i);
  return -1;
}

int FlatModel::find_var(const std::string& name) const {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return static_cast<int>(i);
  return -1;
}

int FlatModel::find_timing(const std::string& name) const {
  for (std::size_t i = 0; i < timing.size(); ++i)
    if (timing[i].name == name) return static_cast<int>(i);
  return -1;
}

bool FlatModel::has_zero_delay() const {
  for (const auto& p : processes)
    for (const auto& l : p.locations)
      if (l.zero_delay) return true;
  return false;
}

std::int64_t sender_value(const FlatModel& flat, int p) {
  const auto& proc = flat.processes[static_cast<std::size_t>(p)];
  return proc.family_index > 0 ? proc.family_index : p + 1;
}

namespace {

bool feq(const FlatAssign& a, const FlatAssign& b) { return a.var == b.var && expr_equal(a.value, b.value); }

bool feq(const FlatEdge& a, const FlatEdge& b) {
  if (a.source != b.source || a.target != b.target || !expr_equal(a.guard, b.guard) || a.kind != b.kind ||
      a.channel != b.channel || a.payload_var != b.payload_var || a.targets != b.targets ||
      a.from_process != b.from_process || !(a.update == b.update) || a.capture != b.capture ||
      a.assign.size() != b.assign.size())
    return false;
  if ((a.payload == nullptr) != (b.payload == nullptr)) return false;
  if (a.payload && !expr_equal(a.payload, b.payload)) return false;
  for (std::size_t i = 0; i < a.assign.size(); ++i)
    if (!feq(a.assign[i], b.assign[i])) return false;
  return true;
}

bool feq(const FlatProcess& a, const FlatProcess& b) {
  if (a.name != b.name || a.family != b.family || a.family_index != b.family_index || a.entry != b.entry ||
      a.out_edges != b.out_edges || a.timeout_init != b.timeout_init || a.locals != b.locals ||
      a.timing != b.timing || a.locations.size() != b.locations.size() || a.edges.size() != b.edges.size())
    return false;
  for (std::size_t i = 0; i < a.locations.size(); ++i) {
    const auto& x = a.locations[i];
    const auto& y = b.locations[i];
    if (x.name != y.name || x.kind != y.kind || x.zero_delay != y.zero_delay) return false;
  }
  for (std::size_t i = 0; i < a.edges.size(); ++i)
    if (!feq(a.edges[i], b.edges[i])) return false;
  return true;
}

}  // namespace

bool operator==(const FlatModel& a, const FlatModel& b) {
  if (a.name != b.name || a.processes.size() != b.processes.size() || a.channels != b.channels ||
      a.messages != b.messages || a.calendar_capacity != b.calendar_capacity || a.max_timeout != b.max_timeout ||
      a.max_constant != b.max_constant || a.sync_eager != b.sync_eager || a.consts != b.consts ||
      a.vars.size() != b.vars.size() || a.timing.size() != b.timing.size() ||
      a.properties.size() != b.properties.size())
    return false;
  for (std::size_t i = 0; i < a.processes.size(); ++i)
    if (!feq(a.processes[i], b.processes[i])) return false;
  for (std::size_t i = 0; i < a.vars.size(); ++i) {
    const auto& x = a.vars[i];
    const auto& y = b.vars[i];
    if (x.name != y.name || x.lo != y.lo || x.hi != y.hi || x.init != y.init || x.owner != y.owner) return false;
  }
  for (std::size_t i = 0; i < a.timing.size(); ++i) {
    const auto& x = a.timing[i];
    const auto& y = b.timing[i];
    if (x.name != y.name || x.owner != y.owner || x.init != y.init) return false;
  }
  for (std::size_t i = 0; i < a.properties.size(); ++i) {
    const auto& x = a.properties[i];
    const auto& y = b.properties[i];
    if (x.name != y.name || x.kind != y.kind || x.formula != y.formula || x.flag1 != y.flag1 ||
        x.flag2 != y.flag2 || x.bound != y.bound)
      return false;
  }
  if (a.accumulator.has_value() != b.accumulator.has_value()) return false;
  if (a.accumulator) {
    const auto& x = *a.accumulator;
    const auto& y = *b.accumulator;
    if (x.var != y.var || x.flag1 != y.flag1 || x.flag2 != y.flag2) return false;
  }
  return true;
}

FlattenError::FlattenError(std::vector<Diagnostic> diags)
    : std::runtime_error(diags.empty() ? std::string("flatten failed") : format_diagnostic(diags.front())),
      diags_(std::move(diags)) {}

std::string render_flat_update(const FlatModel& fm, const FlatUpdate& u) {
  auto base = [&](int w) {
    return w >= 0 ? " + " + fm.timing[static_cast<std::size_t>(w)].name : std::string();
  };
  switch (u.kind) {
    case UpdateRule::Kind::Interval:
      return fmt::format("in {}{}{}, {}{}{}", u.lo_strict ? "(" : "[", u.lo, base(u.lo_base), u.hi, base(u.hi_base),
                         u.hi_strict ? ")" : "]");
    case UpdateRule::Kind::LowerBound:
      return fmt::format("{} {}{}", u.lo_strict ? ">" : ">=", u.lo, base(u.lo_base));
    case UpdateRule::Kind::Infinity:
      return "inf";
    case UpdateRule::Kind::MaxM:
      return "maxM";
  }
  return "?";
}

}  // namespace tocheck
